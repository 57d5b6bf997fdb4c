#pragma once

#include <json.hpp>

#include <string>

#include "acl/bounds.hpp"
#include "acl/models.hpp"
#include "acl/synthdata.hpp"
#include "acl/training.hpp"

namespace acl {

using Json = nlohmann::json;

std::string fnv1a64_hex(const std::string& bytes);
std::string format_double(double v);  // %.17g, round-trip exact

// Model file, schema "acl-model/1".
Json model_to_json(const FeatureExtractor& f);
FeatureExtractor model_from_json(const Json& j);
void save_model(const FeatureExtractor& f, const std::string& path);
FeatureExtractor load_model(const std::string& path);

// Batch CSV with header role,index,slot,dim0..dim{m-1} plus a sidecar JSON
// manifest carrying the structure, seed, model hash and class provenance.
void save_batch(const ContrastiveBatch& batch, const std::string& csv_path,
                const std::string& manifest_path, std::uint64_t seed,
                const std::string& model_hash);
ContrastiveBatch load_batch(const std::string& csv_path, const std::string& manifest_path);

Json risk_to_json(const RiskEstimate& estimate, const std::string& config_hash);
Json bound_report_to_json(const BoundReport& report);
std::string bound_report_table(const BoundReport& report);  // two columns

void save_train_report(const TrainReport& report, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
Json parse_json_file(const std::string& path);  // throws ConfigError with position info

// Generator model spec, schema "acl-generator/1".
Json generator_to_json(const LatentClassModel& model);
LatentClassModel generator_from_json(const Json& j);

double norm_index_from_json(const Json& j);  // accepts numbers or "inf"
Json norm_index_to_json(double p);

}  // namespace acl
