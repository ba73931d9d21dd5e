#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hexloop/error.hpp"

namespace hexloop {

/// Explicit probability table over finitely many configurations.
template <class Config>
class ExactMeasure {
 public:
  ExactMeasure() = default;

  ExactMeasure(std::vector<Config> configs, std::vector<double> probs)
      : configs_(std::move(configs)), probs_(std::move(probs)) {
    if (configs_.size() != probs_.size()) throw StructuralError("configs and probabilities differ in length");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw StructuralError("negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw StructuralError("probabilities sum to " + std::to_string(total));
  }

  /// Normalises log-weights with a max shift; log_z() keeps the constant.
  static ExactMeasure from_log_weights(std::vector<Config> configs, const std::vector<double>& log_w) {
    if (configs.empty()) throw StructuralError("empty configuration list");
    const double top = *std::max_element(log_w.begin(), log_w.end());
    double sum = 0.0;
    for (double lw : log_w) sum += std::exp(lw - top);
    std::vector<double> probs;
    probs.reserve(log_w.size());
    for (double lw : log_w) probs.push_back(std::exp(lw - top) / sum);
    ExactMeasure m;
    m.configs_ = std::move(configs);
    m.probs_ = std::move(probs);
    m.log_z_ = top + std::log(sum);
    return m;
  }

  [[nodiscard]] std::size_t size() const { return configs_.size(); }
  [[nodiscard]] const std::vector<Config>& configs() const& { return configs_; }
  [[nodiscard]] std::vector<Config> configs() && { return std::move(configs_); }
  [[nodiscard]] const std::vector<double>& probs() const& { return probs_; }
  [[nodiscard]] std::vector<double> probs() && { return std::move(probs_); }
  [[nodiscard]] const Config& config(std::size_t i) const { return configs_[i]; }
  [[nodiscard]] double prob(std::size_t i) const { return probs_[i]; }
  [[nodiscard]] double log_z() const { return log_z_; }

  template <class F>
  [[nodiscard]] double expectation(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += probs_[i] * static_cast<double>(f(configs_[i]));
    return s;
  }

  template <class Pred>
  [[nodiscard]] double probability(Pred&& pred) const {
    return expectation([&](const Config& c) { return pred(c) ? 1.0 : 0.0; });
  }

  /// Index of each distinct configuration.
  [[nodiscard]] std::map<Config, std::size_t> index() const {
    std::map<Config, std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) out.emplace(configs_[i], i);
    return out;
  }

  template <class Encode>
  [[nodiscard]] nlohmann::json to_json(Encode&& encode) const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : configs_) cs.push_back(encode(c));
    return {{"configs", cs}, {"probs", probs_}};
  }

 private:
  std::vector<Config> configs_;
  std::vector<double> probs_;
  double log_z_ = 0.0;
};

template <class Config>
double total_variation(const std::map<Config, double>& a, const std::map<Config, double>& b) {
  double s = 0.0;
  for (const auto& [c, p] : a) {
    const auto it = b.find(c);
    s += std::abs(p - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [c, p] : b)
    if (!a.count(c)) s += p;
  return 0.5 * s;
}

template <class Config>
std::map<Config, double> as_map(const ExactMeasure<Config>& m) {
  std::map<Config, double> out;
  for (std::size_t i = 0; i < m.size(); ++i) out[m.config(i)] += m.prob(i);
  return out;
}

template <class Config>
double total_variation(const ExactMeasure<Config>& a, const ExactMeasure<Config>& b) {
  return total_variation(as_map(a), as_map(b));
}

/// Distance between a measure and the empirical law of counted samples.
template <class Config, class Count>
double total_variation(const ExactMeasure<Config>& m, const std::map<Config, Count>& counts) {
  double total = 0.0;
  for (const auto& [c, n] : counts) total += static_cast<double>(n);
  std::map<Config, double> emp;
  for (const auto& [c, n] : counts) emp[c] = static_cast<double>(n) / total;
  return total_variation(as_map(m), emp);
}

}  // namespace hexloop
