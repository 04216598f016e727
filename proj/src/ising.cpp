#include "tvising/ising.hpp"

#include "tvising/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvising {

namespace {

void require_node(int a, int p) {
  if (a < 0 || a >= p)
    throw ValidationError("node index " + std::to_string(a) + " out of range for p=" +
                          std::to_string(p));
}

// Energies of all states, indexed by SpinVector::from_code.
std::vector<double> all_energies(const WeightMatrix& model) {
  const int p = model.p();
  const std::uint64_t states = std::uint64_t{1} << p;
  std::vector<double> e(states);
  std::vector<int> x(p);
  for (std::uint64_t code = 0; code < states; ++code) {
    for (int k = 0; k < p; ++k) x[k] = (code >> k) & 1U ? 1 : -1;
    double s = 0.0;
    for (int b = 1; b < p; ++b)
      for (int a = 0; a < b; ++a) s += x[a] * x[b] * model(a, b);
    e[code] = s;
  }
  return e;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

WeightMatrix::WeightMatrix(int p) {
  if (p < 2) throw ValidationError("WeightMatrix requires p >= 2");
  w_ = Eigen::MatrixXd::Zero(p, p);
}

WeightMatrix::WeightMatrix(Eigen::MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() != w_.cols()) throw ValidationError("WeightMatrix must be square");
  if (w_.rows() < 2) throw ValidationError("WeightMatrix requires p >= 2");
  if (!w_.allFinite()) throw ValidationError("WeightMatrix entries must be finite");
  for (int a = 0; a < p(); ++a) {
    if (w_(a, a) != 0.0) throw ValidationError("WeightMatrix diagonal must be zero");
    for (int b = a + 1; b < p(); ++b)
      if (w_(a, b) != w_(b, a)) throw ValidationError("WeightMatrix must be symmetric");
  }
}

void WeightMatrix::set(int a, int b, double value) {
  require_node(a, p());
  require_node(b, p());
  if (a == b) throw ValidationError("self-coupling is not allowed");
  if (!std::isfinite(value)) throw ValidationError("coupling must be finite");
  w_(a, b) = value;
  w_(b, a) = value;
}

Eigen::VectorXd WeightMatrix::neighborhood(int a) const {
  require_node(a, p());
  Eigen::VectorXd out(p() - 1);
  for (int b = 0, k = 0; b < p(); ++b)
    if (b != a) out(k++) = w_(b, a);
  return out;
}

int WeightMatrix::edge_count() const {
  int count = 0;
  for (int a = 0; a < p(); ++a)
    for (int b = a + 1; b < p(); ++b)
      if (w_(a, b) != 0.0) ++count;
  return count;
}

SpinVector::SpinVector(std::vector<int> values) : values_(std::move(values)) {
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (values_[k] != 1 && values_[k] != -1)
      throw ValidationError("spin " + std::to_string(k) + " is not +1 or -1");
}

SpinVector SpinVector::flipped() const {
  SpinVector out = *this;
  for (int& v : out.values_) v = -v;
  return out;
}

Eigen::VectorXd SpinVector::without(int a) const {
  require_node(a, size());
  Eigen::VectorXd out(size() - 1);
  for (int b = 0, k = 0; b < size(); ++b)
    if (b != a) out(k++) = values_[b];
  return out;
}

Eigen::VectorXd SpinVector::as_vector() const {
  Eigen::VectorXd out(size());
  for (int b = 0; b < size(); ++b) out(b) = values_[b];
  return out;
}

SpinVector SpinVector::from_code(std::uint64_t code, int p) {
  std::vector<int> v(p);
  for (int k = 0; k < p; ++k) v[k] = (code >> k) & 1U ? 1 : -1;
  return SpinVector(std::move(v));
}

void PiecewiseIsingModel::validate() const {
  if (n < 1) throw ValidationError("horizon n must be >= 1");
  if (segments.size() != change_points.size() + 1)
    throw ValidationError("expected " + std::to_string(change_points.size() + 1) +
                          " segments, got " + std::to_string(segments.size()));
  int prev = 1;
  for (int t : change_points) {
    if (t <= prev || t > n)
      throw ValidationError("change-points must be strictly increasing within {2,..,n}");
    prev = t;
  }
  for (const auto& s : segments)
    if (s.p() != segments.front().p())
      throw ValidationError("all segments must share the same node count");
}

int PiecewiseIsingModel::segment_of(int i) const {
  if (i < 1 || i > n)
    throw ValidationError("timestamp " + std::to_string(i) + " outside 1.." + std::to_string(n));
  return static_cast<int>(std::upper_bound(change_points.begin(), change_points.end(), i) -
                          change_points.begin());
}

double energy(const WeightMatrix& model, const SpinVector& x) {
  if (x.size() != model.p()) throw ValidationError("spin vector length does not match p");
  double s = 0.0;
  for (int b = 1; b < model.p(); ++b)
    for (int a = 0; a < b; ++a) s += x[a] * x[b] * model(a, b);
  return s;
}

double log_partition(const WeightMatrix& model) {
  if (model.p() > kMaxJointNodes)
    throw ValidationError("p=" + std::to_string(model.p()) + " too large for enumeration");
  return log_sum_exp(all_energies(model));
}

double joint_probability(const WeightMatrix& model, const SpinVector& x) {
  const double e = energy(model, x);
  return std::exp(e - log_partition(model));
}

std::vector<double> enumerate_distribution(const WeightMatrix& model) {
  if (model.p() > kMaxTableNodes)
    throw ValidationError("p=" + std::to_string(model.p()) + " too large for a probability table");
  std::vector<double> e = all_energies(model);
  const double log_z = log_sum_exp(e);
  for (double& v : e) v = std::exp(v - log_z);
  return e;
}

double conditional_probability(std::span<const double> omega_a, int x_a,
                               std::span<const double> x_rest) {
  if (omega_a.size() != x_rest.size())
    throw ValidationError("neighborhood and spin lengths differ");
  if (x_a != 1 && x_a != -1) throw ValidationError("x_a must be +1 or -1");
  double h = 0.0;
  for (std::size_t k = 0; k < omega_a.size(); ++k) h += omega_a[k] * x_rest[k];
  // e^{2u} / (e^{2u} + 1) written as a logistic to stay finite for large |u|.
  return 1.0 / (1.0 + std::exp(-2.0 * x_a * h));
}

double conditional_probability(const Eigen::VectorXd& omega_a, int x_a,
                               const Eigen::VectorXd& x_rest) {
  return conditional_probability(std::span<const double>(omega_a.data(), omega_a.size()), x_a,
                                 std::span<const double>(x_rest.data(), x_rest.size()));
}

const WeightMatrix& weights_at(const PiecewiseIsingModel& model, int i) {
  return model.segments.at(model.segment_of(i));
}

ModelDiagnostics diagnostics(const PiecewiseIsingModel& model) {
  ModelDiagnostics d;
  if (model.change_points.empty()) {
    d.delta_min = model.n;
    d.xi_min = std::numeric_limits<double>::infinity();
    return d;
  }
  int prev = 1;
  d.delta_min = model.n;
  for (int t : model.change_points) {
    d.delta_min = std::min(d.delta_min, t - prev);
    prev = t;
  }
  d.xi_min = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < model.segments.size(); ++j)
    for (int a = 0; a < model.p(); ++a) {
      const double jump =
          (model.segments[j + 1].neighborhood(a) - model.segments[j].neighborhood(a)).norm();
      d.xi_min = std::min(d.xi_min, jump);
    }
  return d;
}

EdgeSet edges_of(const WeightMatrix& model) {
  EdgeSet out;
  for (int a = 0; a < model.p(); ++a)
    for (int b = a + 1; b < model.p(); ++b)
      if (model(a, b) != 0.0) out.push_back({a, b});
  return out;
}

}  // namespace tvising
