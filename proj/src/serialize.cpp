#include "balreg/serialize.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace balreg {

std::string fmt_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("fmt_double: conversion failed");
  return std::string(buf, ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + tmp + " -> " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

using nlohmann::json;

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec vec_from_json(const json& arr) {
  Vec v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& rows) {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  if (nr == 0) return Mat(0, 0);
  const Eigen::Index nc = static_cast<Eigen::Index>(rows[0].size());
  Mat m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<size_t>(r)].size()) != nc)
      throw std::invalid_argument("matrix rows have inconsistent lengths");
    for (Eigen::Index c = 0; c < nc; ++c)
      m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json prior_to_json(const PriorVariant& prior) {
  json doc;
  if (const auto* gmm = std::get_if<GmmPrior>(&prior)) {
    doc["kind"] = "gmm";
    doc["weights"] = vec_to_json(gmm->weights);
    json means = json::array();
    for (const Vec& m : gmm->means) means.push_back(vec_to_json(m));
    doc["means"] = std::move(means);
    json covs = json::array();
    for (const Mat& c : gmm->covs) covs.push_back(mat_to_json(c));
    doc["covs"] = std::move(covs);
  } else if (const auto* binned = std::get_if<BinnedPrior>(&prior)) {
    doc["kind"] = "binned";
    doc["centers"] = mat_to_json(binned->centers);
    doc["densities"] = vec_to_json(binned->densities);
    doc["bin_width"] = vec_to_json(binned->bin_width);
  } else {
    const auto& discrete = std::get<DiscretePrior>(prior);
    doc["kind"] = "discrete";
    doc["probs"] = vec_to_json(discrete.probs);
  }
  return doc;
}

PriorVariant prior_from_json(const nlohmann::json& doc) {
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "gmm") {
    GmmPrior gmm;
    gmm.weights = vec_from_json(doc.at("weights"));
    for (const auto& m : doc.at("means")) gmm.means.push_back(vec_from_json(m));
    for (const auto& c : doc.at("covs")) gmm.covs.push_back(mat_from_json(c));
    if (gmm.weights.size() != static_cast<Eigen::Index>(gmm.means.size()) ||
        gmm.means.size() != gmm.covs.size())
      throw std::invalid_argument("gmm prior: inconsistent component counts");
    return gmm;
  }
  if (kind == "binned") {
    BinnedPrior binned;
    binned.centers = mat_from_json(doc.at("centers"));
    binned.densities = vec_from_json(doc.at("densities"));
    binned.bin_width = vec_from_json(doc.at("bin_width"));
    if (binned.centers.rows() != binned.densities.size())
      throw std::invalid_argument("binned prior: centers/densities mismatch");
    return binned;
  }
  if (kind == "discrete") {
    DiscretePrior discrete;
    discrete.probs = vec_from_json(doc.at("probs"));
    return discrete;
  }
  throw std::invalid_argument("unknown prior kind: " + kind);
}

nlohmann::json model_to_json(const ModelParams& model) {
  json doc;
  doc["kind"] = model.kind == ModelKind::Linear ? "linear" : "mlp";
  json weights = json::array();
  for (const Mat& w : model.weights) weights.push_back(mat_to_json(w));
  doc["weights"] = std::move(weights);
  json biases = json::array();
  for (const Vec& b : model.biases) biases.push_back(vec_to_json(b));
  doc["biases"] = std::move(biases);
  doc["log_sigma"] = model.noise.log_sigma;
  doc["sigma_learnable"] = model.noise.learnable;
  return doc;
}

ModelParams model_from_json(const nlohmann::json& doc) {
  ModelParams model;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "linear")
    model.kind = ModelKind::Linear;
  else if (kind == "mlp")
    model.kind = ModelKind::Mlp;
  else
    throw std::invalid_argument("unknown model kind: " + kind);
  for (const auto& w : doc.at("weights")) model.weights.push_back(mat_from_json(w));
  for (const auto& b : doc.at("biases")) model.biases.push_back(vec_from_json(b));
  if (model.weights.empty() || model.weights.size() != model.biases.size())
    throw std::invalid_argument("model: inconsistent layer counts");
  model.noise.log_sigma = doc.at("log_sigma").get<double>();
  model.noise.learnable = doc.at("sigma_learnable").get<bool>();
  return model;
}

std::string dataset_to_csv(const SyntheticDataset& data) {
  std::ostringstream out;
  const int m = data.input_dim();
  const int d = data.label_dim();
  for (int j = 0; j < m; ++j) out << (j ? "," : "") << "x_" << j;
  for (int j = 0; j < d; ++j) out << ",y_" << j;
  for (int j = 0; j < d; ++j) out << ",eps_" << j;
  out << '\n';
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < m; ++j) out << (j ? "," : "") << fmt_double(data.inputs(i, j));
    for (int j = 0; j < d; ++j) out << ',' << fmt_double(data.labels(i, j));
    for (int j = 0; j < d; ++j) out << ',' << fmt_double(data.noise(i, j));
    out << '\n';
  }
  return out.str();
}

nlohmann::json dataset_sidecar(const SyntheticDataset& data, const nlohmann::json& spec) {
  json doc;
  doc["spec"] = spec;
  doc["seed"] = data.seed;
  doc["n"] = data.size();
  doc["split"] = data.split == Split::Train ? "train" : "test";
  return doc;
}

Mat labels_from_dataset_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string header;
  if (!std::getline(in, header)) throw std::invalid_argument("dataset csv: empty file");
  std::vector<int> label_cols;
  {
    std::istringstream hs(header);
    std::string col;
    int idx = 0;
    while (std::getline(hs, col, ',')) {
      if (col.rfind("y_", 0) == 0) label_cols.push_back(idx);
      ++idx;
    }
  }
  if (label_cols.empty()) throw std::invalid_argument("dataset csv: no label columns");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> all;
    while (std::getline(ls, cell, ',')) all.push_back(std::stod(cell));
    std::vector<double> labels;
    for (int c : label_cols) labels.push_back(all.at(static_cast<size_t>(c)));
    rows.push_back(std::move(labels));
  }
  Mat labels(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(label_cols.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < label_cols.size(); ++j)
      labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return labels;
}

}  // namespace balreg
