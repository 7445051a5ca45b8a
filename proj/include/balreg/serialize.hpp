#ifndef BALREG_SERIALIZE_HPP
#define BALREG_SERIALIZE_HPP

#include "balreg/dataset.hpp"
#include "balreg/model.hpp"
#include "balreg/priors.hpp"

#include <json.hpp>

#include <string>
#include <variant>

namespace balreg {

/// Shortest decimal form that parses back to the exact same double.
std::string fmt_double(double value);

/// Write via a temp file in the same directory plus rename, so readers never
/// observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

using PriorVariant = std::variant<GmmPrior, BinnedPrior, DiscretePrior>;

nlohmann::json prior_to_json(const PriorVariant& prior);
PriorVariant prior_from_json(const nlohmann::json& doc);

nlohmann::json model_to_json(const ModelParams& model);
ModelParams model_from_json(const nlohmann::json& doc);

/// Dataset CSV: header x_0..x_{m-1}, y_0..y_{d-1}, eps_0..eps_{d-1}, one row
/// per sample, round-trip precision.
std::string dataset_to_csv(const SyntheticDataset& data);

/// Companion document recording how the dataset was generated.
nlohmann::json dataset_sidecar(const SyntheticDataset& data, const nlohmann::json& spec);

/// Reads back the label columns of a dataset CSV (for prior fitting).
Mat labels_from_dataset_csv(const std::string& csv);

}  // namespace balreg

#endif  // BALREG_SERIALIZE_HPP
