#include "shiftlens/scenario.hpp"

#include <fstream>

namespace shiftlens {

void ShiftScenario::validate() const {
  source.validate();
  target.validate();
  if (!source.labeled()) throw SchemaError("scenario source must be labeled");
  if (!target.labeled()) throw SchemaError("scenario target must carry ground-truth labels");
  if (true_pre_shift.rows() != target.rows() || true_pre_shift.cols() != target.dims())
    throw ShapeError("scenario pre-shift matrix does not match target shape");
  if (static_cast<Index>(pre_shift_labels.size()) != target.rows())
    throw ShapeError("scenario pre-shift labels do not match target rows");
  if (source.dims() != target.dims()) throw ShapeError("scenario source and target dimensions differ");
  if (train_count < 0 || train_count > target.rows())
    throw DomainError("scenario train split out of range");
}

void save_scenario(const ShiftScenario& scenario, const std::filesystem::path& dir) {
  scenario.validate();
  std::filesystem::create_directories(dir);
  save_dataset(scenario.source, dir / "source.csv");
  save_dataset(scenario.target, dir / "target.csv");

  Dataset pre;
  pre.features = scenario.true_pre_shift;
  pre.labels = scenario.pre_shift_labels;
  pre.feature_names = scenario.target.feature_names;
  save_dataset(pre, dir / "pre_shift.csv");

  nlohmann::ordered_json doc;
  doc["kind"] = scenario.kind;
  doc["parameters"] = scenario.parameters;
  doc["seed"] = scenario.seed;
  doc["epsilon_label_preserving"] =
      scenario.epsilon_label_preserving == ShiftScenario::LabelFlag::kExactZero ? "exact_zero"
                                                                                : "unknown";
  doc["train_count"] = scenario.train_count;
  std::ofstream out(dir / "scenario.json");
  if (!out) throw SchemaError("cannot write scenario.json in " + dir.string());
  out << doc.dump(2) << '\n';
}

ShiftScenario load_scenario(const std::filesystem::path& dir) {
  ShiftScenario scenario;
  scenario.source = load_dataset(dir / "source.csv");
  scenario.target = load_dataset(dir / "target.csv");
  Dataset pre = load_dataset(dir / "pre_shift.csv");
  scenario.true_pre_shift = pre.features;
  if (!pre.labels) throw SchemaError("pre_shift.csv must carry labels");
  scenario.pre_shift_labels = *pre.labels;

  std::ifstream in(dir / "scenario.json");
  if (!in) throw SchemaError("cannot open scenario.json in " + dir.string());
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("scenario.json is not valid JSON: " + std::string(e.what()));
  }
  scenario.kind = doc.at("kind").get<std::string>();
  scenario.parameters = doc.value("parameters", nlohmann::ordered_json::object());
  scenario.seed = doc.value("seed", std::uint64_t{0});
  scenario.epsilon_label_preserving =
      doc.value("epsilon_label_preserving", std::string("unknown")) == "exact_zero"
          ? ShiftScenario::LabelFlag::kExactZero
          : ShiftScenario::LabelFlag::kUnknown;
  scenario.train_count = doc.value("train_count", Index{0});
  scenario.validate();
  return scenario;
}

}  // namespace shiftlens
