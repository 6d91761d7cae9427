#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cfgroup/data_io.hpp"
#include "cfgroup/error.hpp"

namespace cfgroup::testing {

struct MalformedFixture {
  std::string file;
  std::string kind;
  std::string expected_code;
};

inline std::vector<MalformedFixture> load_malformed_fixtures(const std::filesystem::path& dir) {
  std::ifstream in(dir / "expected.txt");
  std::vector<MalformedFixture> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    MalformedFixture f;
    ss >> f.file >> f.kind >> f.expected_code;
    out.push_back(f);
  }
  return out;
}

/// Parses one fixture and returns the error code string it raised, "ok" when
/// it parsed, or "crash:<what>" for anything that is not a cfgroup::Error.
inline std::string parse_outcome(const std::filesystem::path& dir, const MalformedFixture& f) {
  const auto path = dir / f.file;
  try {
    if (f.kind == "ply") {
      read_ply(path);
    } else if (f.kind == "corrs") {
      read_corrs(path, 10, 10);
    } else {
      read_transform(path);
    }
  } catch (const Error& e) {
    return to_string(e.code());
  } catch (const std::exception& e) {
    return std::string("crash:") + e.what();
  }
  return "ok";
}

}  // namespace cfgroup::testing
