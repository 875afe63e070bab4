//
// Copyright 2026 The ragsec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef RAGSEC_CLI_HPP_
#define RAGSEC_CLI_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ragsec/error.hpp"
#include "ragsec/experiment.hpp"

namespace ragsec {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct Command {
  Verb verb = Verb::kReport;
  std::string config_path;
  uint64_t seed = 42;
  std::string output_path = "-";
};

// Writes to a sibling temp file and renames it into place, so `path` only
// ever holds a complete report.
inline void WriteAtomically(const std::string& path, const std::string& body) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << body;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, target);
}

// argv excludes the program name. Exit codes: 0 ok, 1 usage or config
// error, 2 runtime error. Diagnostics go to `err`; the report goes to
// `out` when --out is "-".
inline int Dispatch(const std::vector<std::string>& argv, std::ostream& out,
                    std::ostream& err) {
  CLI::App app{"ragsec: privacy and security games for retrieval-augmented generation"};
  app.name("ragsec");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Command cmd;
  for (Verb v : {Verb::kIngestCheck, Verb::kMia, Verb::kLeak, Verb::kPoison,
                 Verb::kAuditDp, Verb::kReport}) {
    CLI::App* sub = app.add_subcommand(VerbName(v));
    sub->add_option("--config", cmd.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--seed", cmd.seed, "master seed (default 42)");
    sub->add_option("--out", cmd.output_path, "report path, '-' for stdout");
    sub->callback([&cmd, v] { cmd.verb = v; });
  }

  // CLI11 wants argv in reverse order.
  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  err << "ragsec: verb=" << VerbName(cmd.verb) << " seed=" << cmd.seed << "\n";
  try {
    const ExperimentConfig config = LoadExperimentConfig(cmd.config_path);
    const ExperimentReport report = RunExperiment(config, cmd.verb, cmd.seed);
    const std::string body = SerializeReport(report);
    if (cmd.output_path == "-") {
      out << body;
    } else {
      WriteAtomically(cmd.output_path, body);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace ragsec

#endif  // RAGSEC_CLI_HPP_
