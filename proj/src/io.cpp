#include "acl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace acl {

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

double norm_index_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw ConfigError("norm index string must be \"inf\"");
  }
  return j.get<double>();
}

Json norm_index_to_json(double p) {
  if (std::isinf(p)) return Json("inf");
  return Json(p);
}

namespace {

std::vector<double> matrix_row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

Matrix matrix_from_row_major(const std::vector<double>& data, Eigen::Index rows,
                             Eigen::Index cols) {
  require(static_cast<Eigen::Index>(data.size()) == rows * cols,
          "matrix_from_row_major: size mismatch");
  Matrix m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[idx++];
  return m;
}

}  // namespace

Json model_to_json(const FeatureExtractor& f) {
  Json j;
  j["format"] = "acl-model/1";
  if (const auto* lin = std::get_if<LinearExtractor>(&f)) {
    j["kind"] = "linear";
    j["p"] = norm_index_to_json(lin->p);
    j["budget"] = lin->budget;
    j["rows"] = lin->weight.rows();
    j["cols"] = lin->weight.cols();
    j["weights"] = matrix_row_major(lin->weight);
    return j;
  }
  const auto& mlp = std::get<MlpExtractor>(f);
  j["kind"] = "mlp";
  j["activation"] = to_string(mlp.activation);
  j["leaky_alpha"] = mlp.leaky_alpha;
  j["constraint"] = to_string(mlp.constraint);
  std::vector<Eigen::Index> widths = mlp.widths();
  j["widths"] = widths;
  j["budgets"] = mlp.budgets;
  Json layers = Json::array();
  for (const auto& w : mlp.layers) layers.push_back(matrix_row_major(w));
  j["layers"] = layers;
  return j;
}

FeatureExtractor model_from_json(const Json& j) {
  if (j.value("format", "") != "acl-model/1") throw ConfigError("model: unknown format tag");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    LinearExtractor lin;
    lin.p = norm_index_from_json(j.at("p"));
    lin.budget = j.at("budget").get<double>();
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    lin.weight = matrix_from_row_major(j.at("weights").get<std::vector<double>>(), rows, cols);
    return lin;
  }
  if (kind != "mlp") throw ConfigError("model: unknown kind " + kind);
  MlpExtractor mlp;
  mlp.activation = act_kind_from_string(j.at("activation").get<std::string>());
  mlp.leaky_alpha = j.value("leaky_alpha", 0.01);
  mlp.constraint = constraint_kind_from_string(j.at("constraint").get<std::string>());
  const auto widths = j.at("widths").get<std::vector<Eigen::Index>>();
  require(widths.size() >= 2, "model: widths must list input and output");
  mlp.budgets = j.at("budgets").get<std::vector<double>>();
  const auto layers = j.at("layers");
  require(layers.size() == widths.size() - 1, "model: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l)
    mlp.layers.push_back(matrix_from_row_major(layers[l].get<std::vector<double>>(),
                                               widths[l + 1], widths[l]));
  require(mlp.budgets.size() == mlp.layers.size(), "model: budget count mismatch");
  return mlp;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

Json parse_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // byte offset -> line/column for the error message
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON parse error: " + e.what());
  }
}

void save_model(const FeatureExtractor& f, const std::string& path) {
  write_text_file(path, model_to_json(f).dump(2) + "\n");
}

FeatureExtractor load_model(const std::string& path) {
  return model_from_json(parse_json_file(path));
}

void save_batch(const ContrastiveBatch& batch, const std::string& csv_path,
                const std::string& manifest_path, std::uint64_t seed,
                const std::string& model_hash) {
  batch.check_consistent();
  const Eigen::Index m = batch.dim();

  std::ostringstream csv;
  csv << "role,index,slot";
  for (Eigen::Index d = 0; d < m; ++d) csv << ",dim" << d;
  csv << "\n";
  auto emit = [&](const char* role, std::size_t index, int slot, const auto& row) {
    csv << role << "," << index << "," << slot;
    for (Eigen::Index d = 0; d < m; ++d) csv << "," << format_double(row(d));
    csv << "\n";
  };
  for (std::size_t i = 0; i < batch.size(); ++i) {
    emit("anchor", i, 0, batch.anchors.row(static_cast<Eigen::Index>(i)));
    for (std::size_t s = 0; s < batch.positives.size(); ++s)
      emit("positive", i, static_cast<int>(s),
           batch.positives[s].row(static_cast<Eigen::Index>(i)));
    for (std::size_t s = 0; s < batch.negatives.size(); ++s)
      emit("negative", i, static_cast<int>(s),
           batch.negatives[s].row(static_cast<Eigen::Index>(i)));
  }
  write_text_file(csv_path, csv.str());

  Json manifest;
  manifest["format"] = "acl-batch/1";
  manifest["mode"] = batch.mode == ContrastiveBatch::Mode::Pair ? "pair" : "block";
  manifest["m"] = m;
  manifest["M"] = batch.size();
  manifest["k_or_b"] = batch.slots;
  manifest["seed"] = seed;
  manifest["model_hash"] = model_hash;
  manifest["anchor_class"] = batch.anchor_class;
  manifest["negative_class"] = batch.negative_class;
  write_text_file(manifest_path, manifest.dump(2) + "\n");
}

ContrastiveBatch load_batch(const std::string& csv_path, const std::string& manifest_path) {
  const Json manifest = parse_json_file(manifest_path);
  if (manifest.value("format", "") != "acl-batch/1")
    throw ConfigError("batch manifest: unknown format tag");

  ContrastiveBatch batch;
  batch.mode = manifest.at("mode").get<std::string>() == "pair" ? ContrastiveBatch::Mode::Pair
                                                                : ContrastiveBatch::Mode::Block;
  batch.slots = manifest.at("k_or_b").get<int>();
  const auto m = manifest.at("m").get<Eigen::Index>();
  const auto M = manifest.at("M").get<std::size_t>();
  batch.anchor_class = manifest.at("anchor_class").get<std::vector<int>>();
  batch.negative_class = manifest.at("negative_class").get<std::vector<std::vector<int>>>();

  const std::size_t n_pos = batch.mode == ContrastiveBatch::Mode::Pair
                                ? 1
                                : static_cast<std::size_t>(batch.slots);
  batch.anchors.resize(static_cast<Eigen::Index>(M), m);
  batch.positives.assign(n_pos, Matrix(static_cast<Eigen::Index>(M), m));
  batch.negatives.assign(static_cast<std::size_t>(batch.slots),
                         Matrix(static_cast<Eigen::Index>(M), m));

  std::istringstream in(read_text_file(csv_path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "batch csv: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string role, field;
    std::getline(row, role, ',');
    std::getline(row, field, ',');
    const std::size_t index = std::stoul(field);
    std::getline(row, field, ',');
    const int slot = std::stoi(field);
    Vector x(m);
    for (Eigen::Index d = 0; d < m; ++d) {
      std::getline(row, field, ',');
      x[d] = std::stod(field);
    }
    if (role == "anchor")
      batch.anchors.row(static_cast<Eigen::Index>(index)) = x.transpose();
    else if (role == "positive")
      batch.positives[static_cast<std::size_t>(slot)].row(static_cast<Eigen::Index>(index)) =
          x.transpose();
    else if (role == "negative")
      batch.negatives[static_cast<std::size_t>(slot)].row(static_cast<Eigen::Index>(index)) =
          x.transpose();
    else
      throw ConfigError("batch csv: unknown role " + role);
  }
  batch.check_consistent();
  return batch;
}

Json risk_to_json(const RiskEstimate& estimate, const std::string& config_hash) {
  Json j;
  j["kind"] = estimate.kind;
  j["value"] = estimate.value;
  j["stderr"] = estimate.stderr_;
  j["n"] = estimate.n;
  j["config_hash"] = config_hash;
  return j;
}

Json bound_report_to_json(const BoundReport& report) {
  Json j;
  j["rademacher_bound"] = report.rademacher_bound;
  j["ag_m"] = report.ag_m;
  j["constants_provenance"] = report.constants_provenance;
  j["eta"] = report.eta;
  j["B"] = report.B;
  j["delta"] = report.delta;
  j["M"] = report.M;
  j["components"] = report.components;
  return j;
}

std::string bound_report_table(const BoundReport& report) {
  std::ostringstream out;
  auto row = [&](const std::string& name, double value) {
    out << name;
    for (std::size_t i = name.size(); i < 24; ++i) out << ' ';
    out << format_double(value) << "\n";
  };
  for (const auto& [name, value] : report.components) row(name, value);
  row("eta", report.eta);
  row("B", report.B);
  row("delta", report.delta);
  row("rademacher_bound", report.rademacher_bound);
  row("ag_m", report.ag_m);
  return out.str();
}

void save_train_report(const TrainReport& report, const std::string& path) {
  std::ostringstream out;
  const std::size_t layers = report.layer_norms.empty() ? 0 : report.layer_norms[0].size();
  out << "iteration,risk,regularizer";
  for (std::size_t l = 1; l <= layers; ++l) out << ",norm_l" << l;
  out << "\n";
  for (std::size_t i = 0; i < report.iteration.size(); ++i) {
    out << report.iteration[i] << "," << format_double(report.risk[i]) << ","
        << format_double(report.regularizer[i]);
    for (double n : report.layer_norms[i]) out << "," << format_double(n);
    out << "\n";
  }
  write_text_file(path, out.str());
}

Json generator_to_json(const LatentClassModel& model) {
  Json j;
  j["format"] = "acl-generator/1";
  j["rho"] = std::vector<double>(model.rho.data(), model.rho.data() + model.rho.size());
  Json classes = Json::array();
  for (const auto& c : model.classes) {
    Json jc;
    jc["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
    jc["stddev"] = c.stddev;
    classes.push_back(jc);
  }
  j["classes"] = classes;
  if (model.clamp_box) j["clamp_box"] = *model.clamp_box;
  return j;
}

LatentClassModel generator_from_json(const Json& j) {
  if (j.value("format", "") != "acl-generator/1")
    throw ConfigError("generator: unknown format tag");
  LatentClassModel model;
  const auto rho = j.at("rho").get<std::vector<double>>();
  model.rho = Eigen::Map<const Vector>(rho.data(), static_cast<Eigen::Index>(rho.size()));
  for (const auto& jc : j.at("classes")) {
    ClassSpec spec;
    const auto mean = jc.at("mean").get<std::vector<double>>();
    spec.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    spec.stddev = jc.at("stddev").get<double>();
    model.classes.push_back(std::move(spec));
  }
  if (j.contains("clamp_box")) model.clamp_box = j.at("clamp_box").get<double>();
  model.validate();
  return model;
}

}  // namespace acl
