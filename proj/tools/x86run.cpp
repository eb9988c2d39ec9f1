// Copyright 2026 The x86dual Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// x86run: loads flat binary images and runs them in 64-bit or 32-bit mode.
//
//   x86run --mode m32 --image 0x1000:prog.bin --entry 0x1000 --stack 0x8000
//   x86run --config run.cfg --trace

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "x86dual/loader.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Run flat x86 machine code in 64-bit or 32-bit mode"};

  std::string config_path;
  std::string mode;
  std::vector<std::string> images;
  std::vector<std::string> segs;
  std::string entry, stack, max_steps, fs_base, gs_base;
  bool trace = false;
  bool align_check = false;
  bool compat = false;

  app.add_option("-c,--config", config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "m64 or m32");
  app.add_option("--image", images, "ADDR:PATH of a raw binary (repeatable)");
  app.add_option("--entry", entry, "initial instruction pointer");
  app.add_option("--stack", stack, "initial stack pointer");
  app.add_option("--max-steps", max_steps, "step budget");
  app.add_option("--seg", segs,
                 "NAME:base=..,limit=..,db=..,e=..,l=.. (repeatable)");
  app.add_option("--fs-base", fs_base, "IA32_FS_BASE (m64)");
  app.add_option("--gs-base", gs_base, "IA32_GS_BASE (m64)");
  app.add_flag("--trace", trace, "print one line per executed step");
  app.add_flag("--align-check", align_check, "enable alignment checking");
  app.add_flag("--compat", compat, "m32 as IA-32e compatibility sub-mode");
  CLI11_PARSE(app, argc, argv);

  x86dual::RunSpec spec;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      x86dual::parse_config(spec, in);
    }
    // Flags override the config file.
    if (!mode.empty()) x86dual::apply_setting(spec, "mode", mode);
    for (const std::string& image : images) {
      x86dual::apply_setting(spec, "image", image);
    }
    if (!entry.empty()) x86dual::apply_setting(spec, "entry", entry);
    if (!stack.empty()) x86dual::apply_setting(spec, "stack", stack);
    if (!max_steps.empty()) {
      x86dual::apply_setting(spec, "max_steps", max_steps);
    }
    if (!fs_base.empty()) x86dual::apply_setting(spec, "fs_base", fs_base);
    if (!gs_base.empty()) x86dual::apply_setting(spec, "gs_base", gs_base);
    for (const std::string& seg : segs) {
      const auto colon = seg.find(':');
      if (colon == std::string::npos) {
        throw x86dual::ConfigError("--seg must be NAME:fields");
      }
      x86dual::apply_setting(spec, "seg." + seg.substr(0, colon),
                             seg.substr(colon + 1));
    }
    if (trace) spec.trace = true;
    if (align_check) spec.alignment_checking = true;
    if (compat) spec.compat = true;
    if (spec.images.empty()) throw x86dual::ConfigError("no --image given");
    return x86dual::load_and_run(spec, std::cout);
  } catch (const x86dual::ConfigError& e) {
    std::cerr << "x86run: " << e.what() << '\n';
    return 2;
  }
}
