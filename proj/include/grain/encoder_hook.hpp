// Copyright 2026 The Grain Model Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// External base-layer codec invoked through /bin/sh. The command template
// names the Y4M it reads as {in} and the decoded Y4M it must write as {out}.

#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <thread>

#include "grain/core_types.hpp"

namespace grain {

struct HookResult {
  int exit_code = 0;
  std::string output;  // combined stdout and stderr of the child
};

class EncoderHook {
 public:
  EncoderHook(std::string command_template, double timeout_seconds)
      : template_(std::move(command_template)), timeout_(timeout_seconds) {
    for (std::string_view ph : {std::string_view("{in}"), std::string_view("{out}")}) {
      const std::size_t first = template_.find(ph);
      if (first == std::string::npos ||
          template_.find(ph, first + 1) != std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument,
                    "encoder command must contain " + std::string(ph) +
                        " exactly once: " + template_);
      }
    }
    if (!(timeout_ > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "hook timeout must be > 0");
    }
  }

  const std::string& command_template() const { return template_; }
  double timeout() const { return timeout_; }

  /// The shell command with both placeholders replaced by quoted paths.
  std::string Render(const std::filesystem::path& in,
                     const std::filesystem::path& out) const {
    std::string cmd = template_;
    Replace(cmd, "{in}", Quote(in.string()));
    Replace(cmd, "{out}", Quote(out.string()));
    return cmd;
  }

  /// Runs the command; throws kHookFailure with the captured output on a
  /// nonzero exit, a signal, or a timeout.
  HookResult Run(const std::filesystem::path& in,
                 const std::filesystem::path& out,
                 const std::filesystem::path& log_path) const {
    const std::string cmd = Render(in, out);
    const pid_t pid = fork();
    if (pid < 0) throw Error(ErrorCode::kHookFailure, "fork failed");
    if (pid == 0) {
      setpgid(0, 0);
      const int fd =
          open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      if (fd >= 0) {
        dup2(fd, STDOUT_FILENO);
        dup2(fd, STDERR_FILENO);
        close(fd);
      }
      execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    setpgid(pid, pid);
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_);
    int status = 0;
    bool timed_out = false;
    while (true) {
      const pid_t r = waitpid(pid, &status, WNOHANG);
      if (r == pid) break;
      if (r < 0) throw Error(ErrorCode::kHookFailure, "waitpid failed");
      if (std::chrono::steady_clock::now() > deadline) {
        kill(-pid, SIGKILL);
        kill(pid, SIGKILL);
        waitpid(pid, &status, 0);
        timed_out = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    HookResult result;
    {
      std::ifstream log(log_path);
      result.output.assign(std::istreambuf_iterator<char>(log),
                           std::istreambuf_iterator<char>());
    }
    if (timed_out) {
      throw Error(ErrorCode::kHookFailure,
                  "encoder command timed out after " +
                      std::to_string(timeout_) + " s: " + cmd +
                      "\n" + result.output);
    }
    if (WIFSIGNALED(status)) {
      throw Error(ErrorCode::kHookFailure,
                  "encoder command killed by signal " +
                      std::to_string(WTERMSIG(status)) + ": " + cmd + "\n" +
                      result.output);
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (result.exit_code != 0) {
      throw Error(ErrorCode::kHookFailure,
                  "encoder command exited with status " +
                      std::to_string(result.exit_code) + ": " + cmd + "\n" +
                      result.output);
    }
    return result;
  }

 private:
  static void Replace(std::string& s, std::string_view what,
                      const std::string& with) {
    const std::size_t pos = s.find(what);
    if (pos != std::string::npos) s.replace(pos, what.size(), with);
  }

  static std::string Quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
      if (c == '\'') {
        q += "'\\''";
      } else {
        q += c;
      }
    }
    return q + "'";
  }

  std::string template_;
  double timeout_;
};

}  // namespace grain
