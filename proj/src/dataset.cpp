#include "geoevo/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "geoevo/numeric.hpp"
#include "geoevo/rng.hpp"

namespace geoevo {

nlohmann::json SampleRecord::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["iteration"] = iteration;
  j["diagram"] = diagram_spec;
  j["svg_path"] = svg_path;
  j["question"] = question;
  j["ground_truth"] = ground_truth;
  j["reasoning"] = reasoning;
  j["subproblem_ids"] = subproblem_ids;
  j["principles"] = principles;
  j["aux_count"] = aux_count;
  j["reasoning_tokens"] = reasoning_tokens;
  j["difficulty"] = difficulty;
  if (error_rate)
    j["error_rate"] = *error_rate;
  else
    j["error_rate"] = nullptr;
  j["error_rate_model"] = error_rate_model;
  j["status"] = status;
  j["parent_id"] = parent_id;
  return j;
}

SampleRecord SampleRecord::from_json(const nlohmann::json& j) {
  SampleRecord r;
  r.id = j.at("id").get<std::string>();
  r.iteration = j.at("iteration").get<int>();
  r.diagram_spec = j.at("diagram");
  r.svg_path = j.value("svg_path", "");
  r.question = j.at("question").get<std::string>();
  r.ground_truth = j.at("ground_truth").get<std::string>();
  r.reasoning = j.value("reasoning", "");
  r.subproblem_ids = j.value("subproblem_ids", std::vector<int>{});
  r.principles = j.value("principles", std::vector<std::string>{});
  r.aux_count = j.value("aux_count", 0);
  r.reasoning_tokens = j.value("reasoning_tokens", 0);
  r.difficulty = j.value("difficulty", 0);
  if (j.contains("error_rate") && !j.at("error_rate").is_null())
    r.error_rate = j.at("error_rate").get<double>();
  r.error_rate_model = j.value("error_rate_model", "");
  r.status = j.value("status", "active");
  r.parent_id = j.value("parent_id", "");
  return r;
}

Diagram SampleRecord::diagram() const {
  return build_diagram(diagram_spec, iteration);
}

std::vector<SampleRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset: " + path);
  std::vector<SampleRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(SampleRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw DatasetError(path + ":" + std::to_string(line_no) +
                         ": malformed record: " + e.what());
    }
  }
  return records;
}

void write_jsonl(const std::string& path,
                 const std::vector<SampleRecord>& records) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DatasetError("cannot write dataset: " + tmp.string());
    for (const auto& r : records) out << r.to_json().dump() << "\n";
  }
  fs::rename(tmp, target);
}

Diagram make_seed_diagram(uint64_t seed, int family) {
  SplitMix64 rng(mix_seed(seed, "seed-diagram"));
  if (family < 0) family = static_cast<int>(rng.next() % 5);

  nlohmann::json spec;
  auto pt = [](const char* l, double x, double y) {
    return nlohmann::json{{"label", l}, {"x", x}, {"y", y}};
  };
  auto seg = [](const char* p, const char* q) {
    return nlohmann::json{{"kind", "segment"},
                          {"args", nlohmann::json::array({p, q})}};
  };

  switch (family) {
    case 0: {  // right triangle, legs on the axes before the rigid motion
      const double a = rng.uniform(3.0, 9.0);
      const double b = rng.uniform(2.0, 7.0);
      spec["points"] = {pt("A", 0, 0), pt("B", a, 0), pt("C", 0, b)};
      spec["primitives"] = {seg("A", "B"), seg("B", "C"), seg("C", "A")};
      spec["constraints"] = {{{"kind", "perpendicular"},
                              {"args", {"A", "B", "A", "C"}}}};
      break;
    }
    case 1: {  // scalene triangle
      const double a = rng.uniform(4.0, 10.0);
      const double x = rng.uniform(1.0, a - 1.0);
      const double y = rng.uniform(2.0, 6.0);
      spec["points"] = {pt("A", 0, 0), pt("B", a, 0), pt("C", x, y)};
      spec["primitives"] = {seg("A", "B"), seg("B", "C"), seg("C", "A")};
      spec["constraints"] = nlohmann::json::array();
      break;
    }
    case 2: {  // triangle with tagged midpoint of the base
      const double a = rng.uniform(4.0, 10.0);
      const double x = rng.uniform(1.0, a - 1.0);
      const double y = rng.uniform(2.0, 6.0);
      spec["points"] = {pt("A", 0, 0), pt("B", a, 0), pt("C", x, y),
                        pt("M", a / 2.0, 0)};
      spec["primitives"] = {seg("A", "B"), seg("B", "C"), seg("C", "A")};
      spec["constraints"] = {{{"kind", "midpoint-of"},
                              {"args", {"M", "A", "B"}}}};
      break;
    }
    case 3: {  // rectangle
      const double w = rng.uniform(3.0, 9.0);
      const double h = rng.uniform(2.0, 6.0);
      spec["points"] = {pt("A", 0, 0), pt("B", w, 0), pt("C", w, h),
                        pt("D", 0, h)};
      spec["primitives"] = {seg("A", "B"), seg("B", "C"), seg("C", "D"),
                            seg("D", "A")};
      spec["constraints"] = {
          {{"kind", "perpendicular"}, {"args", {"A", "B", "B", "C"}}},
          {{"kind", "parallel"}, {"args", {"A", "B", "D", "C"}}},
          {{"kind", "parallel"}, {"args", {"A", "D", "B", "C"}}},
          {{"kind", "equal-length"}, {"args", {"A", "B", "D", "C"}}}};
      break;
    }
    case 4: {  // circle with two radii and a horizontal tangent line
      const double r = rng.uniform(2.0, 5.0);
      const double t1 = rng.uniform(0.1, 1.2);
      const double t2 = t1 + rng.uniform(0.6, 1.6);
      spec["points"] = {pt("O", 0, 0),
                        pt("P", r * std::cos(t1), r * std::sin(t1)),
                        pt("Q", r * std::cos(t2), r * std::sin(t2)),
                        pt("S", -2.0 * r, -r), pt("T", 2.0 * r, -r)};
      spec["primitives"] = {
          {{"kind", "circle"}, {"args", {"O"}}, {"radius", r}},
          seg("O", "P"), seg("O", "Q"), seg("S", "T")};
      spec["constraints"] = {
          {{"kind", "point-on"}, {"args", {"P", "O"}}},
          {{"kind", "point-on"}, {"args", {"Q", "O"}}},
          {{"kind", "tangent"}, {"args", {"O", "S", "T"}}}};
      break;
    }
    default: {  // bare segment, deliberately too simple to synthesize from
      const double a = rng.uniform(2.0, 8.0);
      spec["points"] = {pt("A", 0, 0), pt("B", a, 0)};
      spec["primitives"] = {seg("A", "B")};
      spec["constraints"] = nlohmann::json::array();
      break;
    }
  }

  Diagram d = build_diagram(spec, 1);
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  const Vec2 shift(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
  return transformed(d, angle, shift);
}

SampleRecord make_seed_sample(int index, uint64_t seed) {
  const int family = index % 5;
  const uint64_t sample_seed = mix_seed(seed, static_cast<uint64_t>(index));
  const Diagram d = make_seed_diagram(sample_seed, family);

  SampleRecord r;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%03d", index);
  r.id = buf;
  r.iteration = 1;
  r.diagram_spec = to_spec_json(d);
  r.aux_count = d.auxiliary_count();
  r.difficulty = r.aux_count + 1;

  MeasurementQuery q;
  std::string subject;
  switch (family) {
    case 0:
      q = {MeasureKind::Distance, {"B", "C"}};
      subject = "the length of BC";
      break;
    case 1:
      q = {MeasureKind::Distance, {"C", "A"}};
      subject = "the length of CA";
      break;
    case 2:
      q = {MeasureKind::Distance, {"A", "M"}};
      subject = "the length of AM";
      break;
    case 3:
      q = {MeasureKind::PolygonArea, {"A", "B", "C", "D"}};
      subject = "the area of ABCD";
      break;
    default:
      q = {MeasureKind::Distance, {"O", "P"}};
      subject = "the length of OP";
      break;
  }
  const double value = measure(d, q);
  r.ground_truth = canonical_number(value);
  r.question = "In the figure, find " + subject + ".";
  r.reasoning = "Step 1: " + subject + " = " + r.ground_truth + ".";
  r.reasoning_tokens = token_count(r.reasoning);
  return r;
}

std::vector<SampleRecord> make_seed_dataset(int count, uint64_t seed) {
  std::vector<SampleRecord> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(make_seed_sample(i, seed));
  return out;
}

}  // namespace geoevo
