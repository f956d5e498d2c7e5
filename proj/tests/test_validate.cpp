#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "perilps/validate.hpp"

using namespace perilps;

namespace {

bool has(const std::vector<CheckResult>& checks, const std::string& prefix) {
  for (const auto& c : checks)
    if (c.name.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace

TEST_CASE("quick suite passes and skips the patch solves") {
  RunConfig c;
  c.quick = true;
  const auto checks = run_validation(c);
  CHECK(checks.size() > 5);
  for (const auto& ch : checks) {
    CAPTURE(ch.name);
    CHECK(ch.passed);
    CHECK(ch.measured <= ch.tolerance);
  }
  CHECK(has(checks, "lame_constants"));
  CHECK(has(checks, "quadrature_reproduction[inverse_r]"));
  CHECK(has(checks, "quadrature_reproduction[constant]"));
  CHECK_FALSE(has(checks, "patch-static"));

  std::ostringstream out;
  print_checks(out, checks);
  CHECK(out.str().rfind("PASS  lame_constants", 0) == 0);
}

TEST_CASE("a damaged weight cache is detected") {
  const auto root = std::filesystem::temp_directory_path() / "perilps_validate_test";
  std::filesystem::remove_all(root);
  RunConfig c;
  c.quick = true;
  c.cache = true;
  c.out_dir = root.string();
  for (const auto& ch : run_validation(c)) CHECK(ch.passed);

  const auto dir = std::filesystem::path(c.cache_dir());
  REQUIRE(std::filesystem::exists(dir));
  std::size_t damaged = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::fstream f(entry.path(), std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(0, std::ios::end);
    const auto size = static_cast<std::streamoff>(f.tellg());
    f.seekp(size / 2);
    const std::string junk(64, '\x3f');
    f.write(junk.data(), static_cast<std::streamsize>(junk.size()));
    ++damaged;
  }
  REQUIRE(damaged > 0);
  const auto checks = run_validation(c);
  bool failed = false;
  for (const auto& ch : checks)
    if (ch.name.rfind("quadrature_reproduction", 0) == 0 && !ch.passed) failed = true;
  CHECK(failed);
  std::filesystem::remove_all(root);
}
