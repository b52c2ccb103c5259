#include "reload/domain.hpp"

#include "reload/error.hpp"

#include <cmath>

namespace reload {

TransactionCatalog::TransactionCatalog(std::vector<std::string> names) {
  if (names.empty()) throw Error(ErrorCode::InvalidArgument, "transaction catalog is empty");
  transactions_.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw Error(ErrorCode::InvalidArgument, "transaction name is empty");
    if (find(names[i]) != transactions_.size())
      throw Error(ErrorCode::InvalidArgument, "duplicate transaction '" + names[i] + "'");
    transactions_.push_back({i, std::move(names[i])});
  }
}

TransactionCatalog TransactionCatalog::default_catalog() {
  return TransactionCatalog({"Home", "Sign up page", "Sign up", "Login page", "Login", "Search page",
                             "Select product", "Add to cart", "Payment", "Confirm", "Log out"});
}

std::vector<std::string> TransactionCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(transactions_.size());
  for (const auto& t : transactions_) out.push_back(t.name);
  return out;
}

std::size_t TransactionCatalog::find(std::string_view name) const noexcept {
  for (const auto& t : transactions_)
    if (t.name == name) return t.index;
  return transactions_.size();
}

std::int64_t total(const Workload& w) { return w.sum(); }

Workload uniform_workload(std::size_t transactions, std::int64_t per_transaction) {
  return Workload::Constant(static_cast<Eigen::Index>(transactions), per_transaction);
}

bool StateThresholds::valid() const noexcept {
  return rt_low > 0.0 && rt_low < rt_high && er_boundary > 0.0 && er_boundary < 1.0;
}

bool TestObjective::valid() const noexcept {
  return rt_threshold > 0.0 && er_threshold > 0.0 && er_threshold <= 1.0;
}

StateThresholds thresholds_for(const TestObjective& objective, double rt_low) {
  return {rt_low, objective.rt_threshold, objective.er_threshold};
}

SutState SutState::from_index(std::size_t i) {
  if (i >= kCount) throw Error(ErrorCode::InvalidArgument, "state index out of range");
  return {static_cast<RtClass>(i / 2), static_cast<ErClass>(i % 2)};
}

std::string to_string(const SutState& s) {
  static constexpr const char* kRt[] = {"Low", "Normal", "High"};
  static constexpr const char* kEr[] = {"Low", "High"};
  return std::string("RT:") + kRt[static_cast<int>(s.rt)] + "/ER:" + kEr[static_cast<int>(s.er)];
}

SutState classify_state(const PerfMeasurement& m, const StateThresholds& th) {
  SutState s;
  if (m.avg_response_time < th.rt_low)
    s.rt = RtClass::Low;
  else if (m.avg_response_time < th.rt_high)
    s.rt = RtClass::Normal;
  else
    s.rt = RtClass::High;
  s.er = m.error_rate < th.er_boundary ? ErClass::Low : ErClass::High;
  return s;
}

double reward(const PerfMeasurement& m, const TestObjective& obj) {
  const double rt = m.avg_response_time / obj.rt_threshold;
  const double er = m.error_rate / obj.er_threshold;
  return rt * rt + er * er;
}

Workload apply_action(const Workload& w, ActionId a) {
  if (a.k >= static_cast<std::size_t>(w.size()))
    throw Error(ErrorCode::InvalidArgument, "action index out of range");
  Workload out = w;
  auto& u = out(static_cast<Eigen::Index>(a.k));
  u = u == 0 ? 1 : u + (u + 2) / 3;
  return out;
}

bool objective_met(const PerfMeasurement& m, const TestObjective& obj) {
  return m.avg_response_time > obj.rt_threshold || m.error_rate > obj.er_threshold;
}

}  // namespace reload
