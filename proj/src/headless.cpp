// SPDX-License-Identifier: Apache-2.0
#include "hakf/headless.hpp"

#include <ostream>

#include "hakf/runner.hpp"
#include "hakf/store.hpp"

namespace hakf {

namespace {

int report(const Error& e, std::ostream& err) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    err << to_string(e.code()) << "\n";
    for (const auto& violation : v->violations()) {
      err << "  " << (violation.field.empty() ? "(root)" : violation.field) << ": " << violation.rule << "\n";
    }
  } else if (const auto* s = dynamic_cast<const SyntaxError*>(&e)) {
    err << to_string(e.code()) << " at " << s->line() << ":" << s->column() << ": " << e.what() << "\n";
  } else {
    err << to_string(e.code()) << ": " << e.what() << "\n";
  }
  return e.code() == ErrorCode::io_error ? 2 : 1;
}

}  // namespace

int run_headless(const std::filesystem::path& scenario_path, std::optional<std::uint64_t> seed,
                 const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
  try {
    auto text = read_file(scenario_path);
    if (!text) throw Error(ErrorCode::io_error, "cannot read scenario " + scenario_path.string());
    Scenario scenario = parse_scenario(*text);
    const std::uint64_t effective_seed = seed.value_or(scenario.seed);
    RunConfig config = apply_scenario_config(scenario, RunConfig{});
    std::vector<ResolvedDefinition> definitions = resolve_enabled(config);
    std::vector<SimpleEvent> events = generate(scenario, effective_seed);

    CepEngine engine(definitions, config.markings);
    RunOutput output = run_events(engine, events);
    atomic_write(out_path, detections_to_jsonl(output.detections));
    out << run_summary(scenario, effective_seed, definitions, output).dump() << "\n";
    return 0;
  } catch (const Error& e) {
    return report(e, err);
  }
}

int compile_cli(const std::filesystem::path& definition_path,
                const std::optional<std::filesystem::path>& palette_path,
                const std::optional<std::filesystem::path>& mappings_path, std::ostream& out,
                std::ostream& err) {
  try {
    auto read = [](const std::filesystem::path& p) {
      auto text = read_file(p);
      if (!text) throw Error(ErrorCode::io_error, "cannot read " + p.string());
      return *text;
    };
    ComplexEventDefinition def = definition_from_json(parse_json(read(definition_path)));
    Palette palette("default");
    if (palette_path) palette = deserialize_palette(read(*palette_path));
    ConceptMapping mapping;
    if (mappings_path) mapping = ConceptMapping::from_json(parse_json(read(*mappings_path)), palette);
    ConceptContext ctx{palette, mapping};
    out << compile(def, &ctx).text << "\n";
    return 0;
  } catch (const Error& e) {
    return report(e, err);
  }
}

}  // namespace hakf
