// Copyright 2026 The ToolForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Pretend trainer: `sim_trainer <train.jsonl> <backend.json> <iteration>`.
// Raises the scripted backend's capability by its `capability_step`
// (default 0.3, capped at 1), writes trained_backend.json next to the
// training file and prints that path. A step of 0 acts as an identity
// trainer.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>

#include "toolforge/jsonl.hpp"

int main(int argc, char** argv) {
    if (argc != 4) {
        std::cerr << "usage: sim_trainer <training_file> <backend_config> <iteration>\n";
        return 2;
    }
    try {
        const std::filesystem::path train = argv[1];
        std::size_t samples = 0;
        toolforge::for_each_line(train, [&](std::size_t, const std::string&) { ++samples; });

        auto doc = nlohmann::json::parse(toolforge::read_file(argv[2]));
        const double step = doc.value("capability_step", 0.3);
        const double next = std::min(1.0, doc.value("capability", 0.0) + step);
        doc["capability"] = next;
        const auto out = std::filesystem::absolute(train).parent_path() / "trained_backend.json";
        toolforge::write_file(out, doc.dump(2) + "\n");

        std::cout << "trained on " << samples << " samples, capability " << next << "\n" << out.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "sim_trainer: " << e.what() << "\n";
        return 1;
    }
}
