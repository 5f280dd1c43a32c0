#include "actseq/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "actseq/rng.hpp"

namespace actseq {

using nlohmann::json;

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw DataError(where + ": malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

const FeatureGroup& Dataset::group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.name == name) return g;
  }
  throw std::invalid_argument("unknown feature group '" + name + "'");
}

Dataset Dataset::restrict_columns(const std::vector<std::size_t>& keep) const {
  for (const std::size_t c : keep) {
    if (c >= feature_width()) {
      throw std::invalid_argument("restrict_columns: column index out of range");
    }
  }
  Dataset out;
  out.vocabulary = vocabulary;
  out.sample_rate_hz = sample_rate_hz;
  for (const std::size_t c : keep) out.columns.push_back(columns[c]);
  for (const auto& g : groups) {
    FeatureGroup ng{g.name, {}};
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (std::find(g.columns.begin(), g.columns.end(), keep[i]) != g.columns.end()) {
        ng.columns.push_back(i);
      }
    }
    if (!ng.columns.empty()) out.groups.push_back(std::move(ng));
  }
  for (const auto& seq : sequences) {
    FeatureSequence ns;
    ns.id = seq.id;
    ns.labels = seq.labels;
    ns.intention = seq.intention;
    ns.features = Matrix(seq.features.rows, keep.size());
    for (std::size_t r = 0; r < seq.features.rows; ++r) {
      for (std::size_t i = 0; i < keep.size(); ++i) {
        ns.features(r, i) = seq.features(r, keep[i]);
      }
    }
    out.sequences.push_back(std::move(ns));
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto header_path = dir / "header.json";
  const auto csv_path = dir / "data.csv";
  std::ifstream hin(header_path);
  if (!hin) throw DataError("dataset: cannot open " + header_path.string());
  json j;
  try {
    hin >> j;
  } catch (const json::exception& e) {
    throw DataError("dataset: parse error in " + header_path.string() + ": " + e.what());
  }

  Dataset ds;
  std::map<std::string, std::string> intentions;
  try {
    if (j.at("version").get<int>() != 1) {
      throw DataError("dataset: unsupported version in " + header_path.string());
    }
    ds.vocabulary = ActionVocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    ds.columns = j.at("columns").get<std::vector<std::string>>();
    ds.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    if (j.contains("groups")) {
      for (const auto& g : j.at("groups")) {
        FeatureGroup fg{g.at("name").get<std::string>(),
                        g.at("columns").get<std::vector<std::size_t>>()};
        for (const std::size_t c : fg.columns) {
          if (c >= ds.columns.size()) {
            throw DataError("dataset: group '" + fg.name + "' column out of range");
          }
        }
        ds.groups.push_back(std::move(fg));
      }
    }
    if (j.contains("intentions")) {
      intentions = j.at("intentions").get<std::map<std::string, std::string>>();
    }
  } catch (const json::exception& e) {
    throw DataError("dataset: schema error in " + header_path.string() + ": " + e.what());
  }

  std::ifstream in(csv_path);
  if (!in) throw DataError("dataset: cannot open " + csv_path.string());
  std::string line;
  std::size_t line_no = 0;
  const std::size_t width = ds.columns.size();
  if (!std::getline(in, line)) throw DataError("dataset: empty " + csv_path.string());
  ++line_no;
  {
    const auto header = split_csv(line);
    if (header.size() != width + 3 || header[0] != "sequence_id" ||
        header[1] != "frame_index" || header.back() != "label") {
      throw DataError("dataset: bad CSV header at " + csv_path.string() + ":1");
    }
  }

  FeatureSequence* current = nullptr;
  std::vector<Vector> frames;
  std::vector<int> labels;
  auto flush = [&]() {
    if (!current) return;
    current->features = Matrix(frames.size(), width);
    for (std::size_t r = 0; r < frames.size(); ++r) {
      for (std::size_t c = 0; c < width; ++c) current->features(r, c) = frames[r][c];
    }
    current->labels = labels;
    frames.clear();
    labels.clear();
    current = nullptr;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = csv_path.string() + ":" + std::to_string(line_no);
    const auto cells = split_csv(line);
    const std::string& id = cells[0];
    if (cells.size() != width + 3) {
      throw DataError(where + ": sequence '" + id + "' frame " +
                      (cells.size() > 1 ? cells[1] : "?") + ": expected " +
                      std::to_string(width) + " feature columns, got " +
                      std::to_string(cells.size() > 3 ? cells.size() - 3 : 0));
    }
    if (!current || current->id != id) {
      flush();
      for (const auto& s : ds.sequences) {
        if (s.id == id) throw DataError(where + ": sequence '" + id + "' is not contiguous");
      }
      ds.sequences.emplace_back();
      current = &ds.sequences.back();
      current->id = id;
      if (auto it = intentions.find(id); it != intentions.end()) {
        current->intention = ds.vocabulary.require(it->second);
      }
    }
    const std::size_t frame_index =
        static_cast<std::size_t>(parse_double(cells[1], where));
    if (frame_index != frames.size()) {
      throw DataError(where + ": sequence '" + id + "': expected frame_index " +
                      std::to_string(frames.size()));
    }
    Vector f(width);
    for (std::size_t c = 0; c < width; ++c) f[c] = parse_double(cells[2 + c], where);
    frames.push_back(std::move(f));
    const std::string& label = cells.back();
    if (label.empty()) {
      labels.push_back(-1);
    } else {
      const int idx = ds.vocabulary.index(label);
      if (idx < 0) throw DataError(where + ": unknown label '" + label + "'");
      labels.push_back(idx);
    }
  }
  flush();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json j;
  j["version"] = 1;
  j["sample_rate_hz"] = ds.sample_rate_hz;
  j["vocabulary"] = ds.vocabulary.symbols();
  j["columns"] = ds.columns;
  j["groups"] = json::array();
  for (const auto& g : ds.groups) {
    j["groups"].push_back({{"name", g.name}, {"columns", g.columns}});
  }
  json intents = json::object();
  for (const auto& s : ds.sequences) {
    if (s.intention >= 0) intents[s.id] = ds.vocabulary.symbol(s.intention);
  }
  if (!intents.empty()) j["intentions"] = intents;
  {
    std::ofstream out(dir / "header.json");
    out << j.dump(2) << "\n";
  }
  std::ofstream out(dir / "data.csv");
  out << "sequence_id,frame_index";
  for (const auto& c : ds.columns) out << "," << c;
  out << ",label\n";
  for (const auto& s : ds.sequences) {
    for (std::size_t r = 0; r < s.length(); ++r) {
      out << s.id << "," << r;
      for (std::size_t c = 0; c < ds.feature_width(); ++c) {
        out << "," << fmt_double(s.features(r, c));
      }
      out << ",";
      if (s.labels[r] >= 0) out << ds.vocabulary.symbol(s.labels[r]);
      out << "\n";
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> SyntheticSpec::cyclic_grammar(int v) {
  std::vector<std::vector<double>> t(static_cast<std::size_t>(v),
                                     std::vector<double>(static_cast<std::size_t>(v), 0.0));
  for (int a = 0; a < v; ++a) t[static_cast<std::size_t>(a)][static_cast<std::size_t>((a + 1) % v)] = 1.0;
  return t;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  const int v = spec.vocab_size;
  if (v < 2) throw std::invalid_argument("synthetic: vocab_size must be >= 2");
  if (spec.min_len < 1 || spec.max_len < spec.min_len || spec.num_sequences < 1) {
    throw std::invalid_argument("synthetic: invalid sequence counts");
  }
  std::vector<std::vector<double>> transition = spec.transition;
  if (transition.empty()) {
    // One action per whole sequence.
    transition.assign(static_cast<std::size_t>(v),
                      std::vector<double>(static_cast<std::size_t>(v), 0.0));
    for (int a = 0; a < v; ++a) transition[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = 1.0;
  }
  if (static_cast<int>(transition.size()) != v) {
    throw std::invalid_argument("synthetic: transition table must have V rows");
  }
  for (const auto& row : transition) {
    if (static_cast<int>(row.size()) != v) {
      throw std::invalid_argument("synthetic: transition row width mismatch");
    }
    double sum = 0.0;
    for (const double p : row) {
      if (p < 0.0) throw std::invalid_argument("synthetic: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("synthetic: transition row does not sum to 1");
    }
  }

  const int informative = spec.num_early + spec.num_late;
  Rng rng(derive_seed(spec.seed, "generate_synthetic"));
  std::vector<std::vector<double>> means = spec.emission_means;
  if (means.empty()) {
    // Random sign patterns, redrawn until both the early and the late column
    // blocks distinguish every pair of actions (when wide enough to do so).
    auto block_distinct = [&](const std::vector<std::vector<double>>& m, int begin,
                              int count) {
      if (count <= 0 || (1 << std::min(count, 30)) < v) return true;
      for (int a = 0; a < v; ++a) {
        for (int b = a + 1; b < v; ++b) {
          bool differ = false;
          for (int c = begin; c < begin + count; ++c) {
            if (m[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)] !=
                m[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)]) {
              differ = true;
              break;
            }
          }
          if (!differ) return false;
        }
      }
      return true;
    };
    means.assign(static_cast<std::size_t>(v), std::vector<double>(static_cast<std::size_t>(informative)));
    for (int attempt = 0; attempt < 1000; ++attempt) {
      for (auto& row : means) {
        for (double& m : row) m = (rng.uniform() < 0.5 ? -1.0 : 1.0) * spec.emission_scale;
      }
      if (block_distinct(means, 0, spec.num_early) &&
          block_distinct(means, spec.num_early, spec.num_late)) {
        break;
      }
    }
  }
  if (static_cast<int>(means.size()) != v ||
      (informative > 0 && static_cast<int>(means[0].size()) != informative)) {
    throw std::invalid_argument("synthetic: emission mean dimensions inconsistent");
  }

  Dataset ds;
  ds.sample_rate_hz = spec.sample_rate_hz;
  {
    std::vector<std::string> symbols;
    for (int a = 0; a < v; ++a) symbols.push_back("act" + std::to_string(a));
    ds.vocabulary = ActionVocabulary(symbols);
  }
  FeatureGroup early{"early", {}}, late{"late", {}}, noise{"noise", {}};
  for (int c = 0; c < spec.num_early; ++c) {
    early.columns.push_back(ds.columns.size());
    ds.columns.push_back("early_" + std::to_string(c));
  }
  for (int c = 0; c < spec.num_late; ++c) {
    late.columns.push_back(ds.columns.size());
    ds.columns.push_back("late_" + std::to_string(c));
  }
  for (int c = 0; c < spec.num_noise; ++c) {
    noise.columns.push_back(ds.columns.size());
    ds.columns.push_back("noise_" + std::to_string(c));
  }
  if (!early.columns.empty()) ds.groups.push_back(early);
  if (!late.columns.empty()) ds.groups.push_back(late);
  if (!noise.columns.empty()) ds.groups.push_back(noise);

  std::vector<double> initial = spec.initial;
  if (initial.empty()) initial.assign(static_cast<std::size_t>(v), 1.0 / v);

  for (int s = 0; s < spec.num_sequences; ++s) {
    FeatureSequence seq;
    seq.id = "seq" + std::to_string(s);
    const std::size_t len = static_cast<std::size_t>(spec.min_len) +
                            rng.index(static_cast<std::size_t>(spec.max_len - spec.min_len + 1));
    int action = rng.sample(initial);
    seq.intention = action;  // sequence label: the initial action
    seq.features = Matrix(len, ds.columns.size());
    const std::size_t onset = static_cast<std::size_t>(spec.late_onset * static_cast<double>(len));
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) action = rng.sample(transition[static_cast<std::size_t>(action)]);
      seq.labels.push_back(action);
      const auto& m = means[static_cast<std::size_t>(action)];
      std::size_t col = 0;
      for (int c = 0; c < spec.num_early; ++c, ++col) {
        seq.features(t, col) = m[static_cast<std::size_t>(c)] + spec.noise_scale * rng.normal();
      }
      for (int c = 0; c < spec.num_late; ++c, ++col) {
        const double mean = (t >= onset) ? m[static_cast<std::size_t>(spec.num_early + c)] : 0.0;
        seq.features(t, col) = mean + spec.noise_scale * rng.normal();
      }
      for (int c = 0; c < spec.num_noise; ++c, ++col) {
        seq.features(t, col) = spec.noise_scale * rng.normal();
      }
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("synthetic spec: cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("synthetic spec: parse error in " + file.string() + ": " + e.what());
  }
  SyntheticSpec s;
  try {
    s.vocab_size = j.value("vocab_size", s.vocab_size);
    if (j.contains("transition")) {
      if (j.at("transition").is_string() && j.at("transition") == "cyclic") {
        s.transition = SyntheticSpec::cyclic_grammar(s.vocab_size);
      } else {
        s.transition = j.at("transition").get<std::vector<std::vector<double>>>();
      }
    }
    if (j.contains("initial")) s.initial = j.at("initial").get<std::vector<double>>();
    s.num_early = j.value("num_early", s.num_early);
    s.num_late = j.value("num_late", s.num_late);
    s.num_noise = j.value("num_noise", s.num_noise);
    s.emission_scale = j.value("emission_scale", s.emission_scale);
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    s.late_onset = j.value("late_onset", s.late_onset);
    s.num_sequences = j.value("num_sequences", s.num_sequences);
    s.min_len = j.value("min_len", s.min_len);
    s.max_len = j.value("max_len", s.max_len);
    s.sample_rate_hz = j.value("sample_rate_hz", s.sample_rate_hz);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw DataError("synthetic spec: schema error in " + file.string() + ": " + e.what());
  }
  return s;
}

}  // namespace actseq
