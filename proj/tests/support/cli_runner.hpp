#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace mecllm::testing {

struct CliResult {
  int exit_code = -1;
  std::string err;
};

// Runs the CLI binary with args through the shell; stderr is captured to a file
// next to the working directory.
inline CliResult run_cli(const std::string& binary, const std::string& args,
                         const std::filesystem::path& workdir) {
  std::filesystem::create_directories(workdir);
  const std::filesystem::path err = workdir / "stderr.txt";
  const std::string cmd = "cd '" + workdir.string() + "' && '" + binary + "' " + args + " > /dev/null 2> '" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(err);
  std::stringstream ss;
  ss << is.rdbuf();
  r.err = ss.str();
  return r;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// A fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mecllm_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mecllm::testing
