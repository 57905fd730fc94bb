// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace hakf {

/// Generates the scenario's stream, runs the engine and writes the
/// detection JSONL to `out_path`; prints a JSON summary to `out`.
/// `seed` overrides the scenario's own. Exit codes: 0 ok, 1 validation
/// failure (violations on `err`), 2 I/O failure.
int run_headless(const std::filesystem::path& scenario_path, std::optional<std::uint64_t> seed,
                 const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);

/// Prints the canonical fragment for a definition file. Concept matchers
/// need `palette_path` and/or `mappings_path`. Exit codes as run_headless.
int compile_cli(const std::filesystem::path& definition_path,
                const std::optional<std::filesystem::path>& palette_path,
                const std::optional<std::filesystem::path>& mappings_path, std::ostream& out,
                std::ostream& err);

}  // namespace hakf
