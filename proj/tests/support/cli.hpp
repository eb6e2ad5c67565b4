#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testcli {

inline std::string cli_path() {
    if (const char* env = std::getenv("CSTEER_CLI")) return env;
    return "./csteer";
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the tool with stdout/stderr captured through temp files.
inline RunResult run_cli(const std::string& args) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path();
    auto out_path = dir / ("csteer_test_out_" + std::to_string(counter) + ".txt");
    auto err_path = dir / ("csteer_test_err_" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = cli_path() + " " + args + " >" + out_path.string() + " 2>" + err_path.string();
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = rc == -1 ? -1 : WEXITSTATUS(rc);
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::filesystem::remove(out_path);
    std::filesystem::remove(err_path);
    return r;
}

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("csteer_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testcli
