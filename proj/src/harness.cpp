#include "reload/harness.hpp"

#include "reload/baselines.hpp"
#include "reload/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace reload {

using nlohmann::json;

std::string_view label(Technique t) {
  switch (t) {
    case Technique::A1: return "A1";
    case Technique::A2: return "A2";
    case Technique::A3: return "A3";
    case Technique::A4: return "A4";
    case Technique::B: return "B";
    case Technique::C: return "C";
  }
  return "?";
}

Technique technique_from_string(std::string_view s) {
  std::string up(s);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Technique t : {Technique::A1, Technique::A2, Technique::A3, Technique::A4, Technique::B, Technique::C})
    if (label(t) == up) return t;
  throw Error(ErrorCode::ConfigInvalid, "unknown technique '" + std::string(s) + "'");
}

bool is_tabular(Technique t) { return t == Technique::A1 || t == Technique::A2 || t == Technique::A3; }

LearningParams learning_params_for(Technique t, const LearningParams& base) {
  LearningParams p = base;
  if (t == Technique::A1) p.epsilon = EpsilonSchedule::fixed(0.2);
  if (t == Technique::A2) p.epsilon = EpsilonSchedule::fixed(0.5);
  return p;
}

void ExperimentPlan::validate() const {
  if (episodes < 1) throw Error(ErrorCode::ConfigInvalid, "plan: episodes must be at least 1");
  if (!objective.valid()) throw Error(ErrorCode::ConfigInvalid, "plan: objective thresholds out of range");
  if (is_tabular(technique) && !learning.valid())
    throw Error(ErrorCode::ConfigInvalid, "plan: learning parameters out of range");
  if (technique == Technique::A4 && (dqn.batch_size < 1 || dqn.sync_every < 1 || !dqn.epsilon.valid()))
    throw Error(ErrorCode::ConfigInvalid, "plan: DQN parameters out of range");
  if (convergence_window < 2) throw Error(ErrorCode::ConfigInvalid, "plan: convergence window must be >= 2");
}

std::vector<double> ExperimentReport::final_users() const {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const auto& e : episodes) out.push_back(static_cast<double>(e.final_users));
  return out;
}

double cost_saving(double agent_mean, double reference_mean) {
  if (!(reference_mean > 0.0)) throw Error(ErrorCode::ZeroReference, "reference mean must be positive");
  return (reference_mean - agent_mean) / reference_mean;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::optional<double> median_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Trace>
void append(ExperimentReport& report, const Trace& t, std::size_t episode) {
  report.episodes.push_back({episode, t.final_users, t.terminal, t.objective});
}

}  // namespace

void summarize(ExperimentReport& report, std::size_t savings_window, std::size_t window, double tol) {
  const auto conv = detect_convergence(report.final_users(), window, tol);
  report.convergence_episode = conv ? std::optional<std::size_t>(*conv + 1) : std::nullopt;

  const std::size_t n = report.episodes.size();
  const std::size_t first = n > savings_window ? n - savings_window : 0;
  std::vector<double> tail;
  report.nonterminal = 0;
  for (std::size_t i = first; i < n; ++i) {
    if (report.episodes[i].terminal)
      tail.push_back(static_cast<double>(report.episodes[i].final_users));
    else
      ++report.nonterminal;
  }
  report.window_mean = mean_of(tail);
  report.window_stddev = stddev_of(tail);
}

ExperimentReport run_plan(const ExperimentPlan& plan, Environment& env, PolicySnapshot* snapshot) {
  plan.validate();
  ExperimentReport report;
  report.technique = plan.name.empty() ? std::string(label(plan.technique)) : plan.name;
  report.seed = plan.options.seed;

  try {
    switch (plan.technique) {
      case Technique::A1:
      case Technique::A2:
      case Technique::A3: {
        const LearningParams params = learning_params_for(plan.technique, plan.learning);
        QTable q(env.catalog().size());
        for (std::size_t e = 0; e < plan.episodes; ++e)
          append(report, run_episode(env, q, params, plan.objective, plan.options, e, params.epsilon.at(e)), e + 1);
        if (snapshot) {
          *snapshot = PolicySnapshot{std::move(q), env.catalog(), plan.options.thresholds.resolve(plan.objective),
                                     plan.objective, plan.episodes};
        }
        break;
      }
      case Technique::A4: {
        DqnAgent agent(plan.dqn, env.catalog().size(), plan.options.seed);
        for (std::size_t e = 0; e < plan.episodes; ++e)
          append(report,
                 run_episode_dqn(env, agent, plan.dqn, plan.objective, plan.options, e, plan.dqn.epsilon.at(e)),
                 e + 1);
        if (snapshot) {
          *snapshot = PolicySnapshot{agent.online, env.catalog(), plan.options.thresholds.resolve(plan.objective),
                                     plan.objective, plan.episodes};
        }
        break;
      }
      case Technique::B:
        for (std::size_t e = 0; e < plan.episodes; ++e)
          append(report, run_standard_baseline(env, plan.objective, plan.options, e), e + 1);
        break;
      case Technique::C:
        for (std::size_t e = 0; e < plan.episodes; ++e)
          append(report, run_random_testing(env, plan.objective, plan.options, e), e + 1);
        break;
    }
  } catch (const Error& e) {
    report.failure = e.what();
  }
  summarize(report, plan.savings_window, plan.convergence_window, plan.convergence_tol);
  return report;
}

ExperimentReport run_transfer_plan(Technique technique, Environment& env, PolicySnapshot* snapshot,
                                   const LearningParams& transfer_params,
                                   const std::vector<TestObjective>& schedule,
                                   const EpisodeOptions& options, std::size_t first_episode) {
  ExperimentReport report;
  report.technique = std::string(label(technique));
  report.phase = "transfer";
  report.seed = options.seed;
  try {
    if (is_tabular(technique)) {
      if (!snapshot) throw Error(ErrorCode::InvalidArgument, "transfer of a learning technique needs a snapshot");
      snapshot->episodes = first_episode;
      const auto traces = run_transfer_learning(env, *snapshot, transfer_params, schedule, options);
      for (std::size_t i = 0; i < traces.size(); ++i) append(report, traces[i], first_episode + i + 1);
    } else if (technique == Technique::B || technique == Technique::C) {
      for (std::size_t i = 0; i < schedule.size(); ++i) {
        const std::size_t e = first_episode + i;
        const StrategyRun run = technique == Technique::B ? run_standard_baseline(env, schedule[i], options, e)
                                                          : run_random_testing(env, schedule[i], options, e);
        append(report, run, e + 1);
      }
    } else {
      throw Error(ErrorCode::InvalidArgument, "transfer is not defined for technique " + report.technique);
    }
  } catch (const Error& e) {
    report.failure = e.what();
  }
  // Every transfer episode counts: the objective changes each time, so there is no
  // convergence to detect and the savings window is the whole schedule.
  summarize(report, schedule.size(), 2, 0.0);
  report.convergence_episode.reset();
  return report;
}

std::vector<TestObjective> drift_schedule(const TestObjective& start, std::size_t count, double rt_step,
                                          double er_step) {
  std::vector<TestObjective> out;
  out.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    // Computed from the start value each time so that no rounding accumulates.
    const double er = std::round((start.er_threshold + er_step * static_cast<double>(k)) * 1e9) / 1e9;
    out.push_back({start.rt_threshold + rt_step * static_cast<double>(k), std::min(1.0, er)});
  }
  return out;
}

SummaryRow summarize_runs(const std::vector<const ExperimentReport*>& runs) {
  SummaryRow row;
  if (runs.empty()) return row;
  row.technique = runs.front()->technique;
  row.phase = runs.front()->phase;
  row.runs = runs.size();
  std::vector<double> means, conv;
  for (const ExperimentReport* r : runs) {
    means.push_back(r->window_mean);
    row.nonterminal += r->nonterminal;
    if (r->convergence_episode) conv.push_back(static_cast<double>(*r->convergence_episode));
  }
  row.mean_final_users = mean_of(means);
  row.stddev_final_users = stddev_of(means);
  row.converged_runs = conv.size();
  // A median over runs that never converged is undefined; report it only when a
  // majority converged, counting the others as later than any observed episode.
  if (2 * conv.size() > runs.size()) {
    std::vector<double> all = conv;
    all.resize(runs.size(), std::numeric_limits<double>::infinity());
    row.median_convergence = median_of(all);
    if (row.median_convergence && std::isinf(*row.median_convergence)) row.median_convergence.reset();
  }
  return row;
}

const SummaryRow* StudyBundle::row(std::string_view technique, std::string_view phase) const {
  for (const auto& r : summary)
    if (r.technique == technique && r.phase == phase) return &r;
  return nullptr;
}

namespace {

std::vector<const ExperimentReport*> select(const std::vector<ExperimentReport>& reports, std::string_view technique,
                                            std::string_view phase) {
  std::vector<const ExperimentReport*> out;
  for (const auto& r : reports)
    if (r.technique == technique && r.phase == phase) out.push_back(&r);
  return out;
}

void add_savings(std::vector<SummaryRow>& rows, std::string_view phase) {
  const SummaryRow* b = nullptr;
  const SummaryRow* c = nullptr;
  for (const auto& r : rows) {
    if (r.phase != phase) continue;
    if (r.technique == "B") b = &r;
    if (r.technique == "C") c = &r;
  }
  const double b_mean = b ? b->mean_final_users : 0.0;
  const double c_mean = c ? c->mean_final_users : 0.0;
  for (auto& r : rows) {
    if (r.phase != phase || r.technique == "B" || r.technique == "C") continue;
    if (b_mean > 0.0) r.saving_vs_baseline = cost_saving(r.mean_final_users, b_mean);
    if (c_mean > 0.0) r.saving_vs_random = cost_saving(r.mean_final_users, c_mean);
  }
}

EpisodeOptions options_for_seed(const StudyConfig& config, std::uint64_t seed) {
  EpisodeOptions o = config.options;
  o.seed = seed;
  return o;
}

ExperimentPlan plan_for(const StudyConfig& config, Technique t, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.technique = t;
  plan.episodes = t == Technique::A4 ? config.dqn_episodes : config.episodes;
  plan.objective = config.objective;
  plan.learning = config.learning;
  plan.dqn = config.dqn;
  plan.options = options_for_seed(config, seed);
  plan.convergence_window = config.convergence_window;
  plan.convergence_tol = config.convergence_tol;
  plan.savings_window = config.savings_window;
  return plan;
}

}  // namespace

StudyBundle run_efficiency_study(const StudyConfig& config, const EnvironmentFactory& make_env) {
  StudyBundle bundle;
  bundle.kind = "efficiency";
  constexpr Technique kAll[] = {Technique::A1, Technique::A2, Technique::A3, Technique::A4, Technique::B, Technique::C};
  constexpr Technique kTransfer[] = {Technique::A3, Technique::B, Technique::C};

  for (std::uint64_t seed : config.seeds) {
    auto env = make_env(seed);
    PolicySnapshot a3_policy;
    for (Technique t : kAll)
      bundle.reports.push_back(run_plan(plan_for(config, t, seed), *env, t == Technique::A3 ? &a3_policy : nullptr));

    LearningParams transfer = config.learning;
    transfer.epsilon = EpsilonSchedule::fixed(config.transfer_epsilon);
    for (Technique t : kTransfer)
      bundle.reports.push_back(run_transfer_plan(t, *env, &a3_policy, transfer, config.transfer_schedule,
                                                 options_for_seed(config, seed), config.episodes));
  }

  for (std::string_view phase : {"initial", "transfer"}) {
    for (Technique t : kAll) {
      auto runs = select(bundle.reports, label(t), phase);
      if (!runs.empty()) bundle.summary.push_back(summarize_runs(runs));
    }
    add_savings(bundle.summary, phase);
  }
  return bundle;
}

std::vector<SensitivityCell> sensitivity_grid() {
  return {{"alpha=0.1 gamma=0.5", AlphaSchedule::fixed(0.1), 0.5},
          {"alpha=decaying gamma=0.5", AlphaSchedule::decaying(), 0.5},
          {"alpha=0.5 gamma=0.1", AlphaSchedule::fixed(0.5), 0.1},
          {"alpha=0.5 gamma=0.9", AlphaSchedule::fixed(0.5), 0.9}};
}

StudyBundle run_sensitivity_study(const StudyConfig& config, const EnvironmentFactory& make_env) {
  StudyBundle bundle;
  bundle.kind = "sensitivity";
  const auto grid = sensitivity_grid();
  for (std::uint64_t seed : config.seeds) {
    auto env = make_env(seed);
    for (const auto& cell : grid) {
      ExperimentPlan plan = plan_for(config, Technique::A3, seed);
      plan.name = cell.name;
      plan.learning.alpha = cell.alpha;
      plan.learning.gamma = cell.gamma;
      bundle.reports.push_back(run_plan(plan, *env));
    }
  }
  for (const auto& cell : grid) bundle.summary.push_back(summarize_runs(select(bundle.reports, cell.name, "initial")));
  return bundle;
}

namespace {

std::string fmt_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string fmt_optional(const std::optional<double>& x) { return x ? fmt_number(*x) : std::string(); }

}  // namespace

std::string report_csv(const ExperimentReport& report) {
  std::string out = "episode,technique,final_users,terminal,objective_rt,objective_er\n";
  for (const auto& e : report.episodes) {
    out += std::to_string(e.episode) + ',' + report.technique + ',' + std::to_string(e.final_users) + ',' +
           (e.terminal ? "1" : "0") + ',' + fmt_number(e.objective.rt_threshold) + ',' +
           fmt_number(e.objective.er_threshold) + '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "technique,phase,runs,mean_final_users,stddev_final_users,median_convergence_episode,converged_runs,"
      "nonterminal_excluded,saving_vs_baseline,saving_vs_random\n";
  for (const auto& r : rows) {
    out += r.technique + ',' + r.phase + ',' + std::to_string(r.runs) + ',' + fmt_number(r.mean_final_users) + ',' +
           fmt_number(r.stddev_final_users) + ',' + fmt_optional(r.median_convergence) + ',' +
           std::to_string(r.converged_runs) + ',' + std::to_string(r.nonterminal) + ',' +
           fmt_optional(r.saving_vs_baseline) + ',' + fmt_optional(r.saving_vs_random) + '\n';
  }
  return out;
}

std::string report_svg(const ExperimentReport& report) {
  constexpr double W = 640, H = 320, L = 50, R = 20, T = 30, B = 40;
  const auto ys = report.final_users();
  const double y_max = ys.empty() ? 1.0 : std::max(1.0, *std::max_element(ys.begin(), ys.end()) * 1.1);
  const std::size_t first = report.episodes.empty() ? 1 : report.episodes.front().episode;
  const std::size_t last = report.episodes.empty() ? 1 : report.episodes.back().episode;
  const double span = std::max<double>(1.0, static_cast<double>(last - first));
  auto px = [&](std::size_t ep) { return L + (W - L - R) * static_cast<double>(ep - first) / span; };
  auto py = [&](double y) { return H - B - (H - T - B) * y / y_max; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << report.technique << " ("
      << report.phase << ", seed " << report.seed << ")</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (W / 2) << "\" y=\"" << H - 8 << "\" font-family=\"sans-serif\" font-size=\"12\">episode</text>\n";
  svg << "<text x=\"4\" y=\"" << T - 6 << "\" font-family=\"sans-serif\" font-size=\"12\">users (max "
      << fmt_number(y_max) << ")</text>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& e : report.episodes)
    svg << fmt_number(px(e.episode)) << ',' << fmt_number(py(static_cast<double>(e.final_users))) << ' ';
  svg << "\"/>\n";
  for (const auto& e : report.episodes) {
    if (e.terminal) continue;
    svg << "<circle cx=\"" << fmt_number(px(e.episode)) << "\" cy=\"" << fmt_number(py(static_cast<double>(e.final_users)))
        << "\" r=\"3\" fill=\"red\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }
std::optional<double> optional_double(const json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

}  // namespace

std::string bundle_to_json(const StudyBundle& bundle) {
  json reports = json::array();
  for (const auto& r : bundle.reports) {
    json episodes = json::array();
    for (const auto& e : r.episodes)
      episodes.push_back({e.episode, e.final_users, e.terminal, e.objective.rt_threshold, e.objective.er_threshold});
    reports.push_back({{"technique", r.technique},
                       {"phase", r.phase},
                       {"seed", r.seed},
                       {"episodes", episodes},
                       {"convergence_episode", r.convergence_episode ? json(*r.convergence_episode) : json(nullptr)},
                       {"window_mean", r.window_mean},
                       {"window_stddev", r.window_stddev},
                       {"nonterminal", r.nonterminal},
                       {"failure", r.failure ? json(*r.failure) : json(nullptr)}});
  }
  json summary = json::array();
  for (const auto& s : bundle.summary) {
    summary.push_back({{"technique", s.technique},
                       {"phase", s.phase},
                       {"runs", s.runs},
                       {"mean_final_users", s.mean_final_users},
                       {"stddev_final_users", s.stddev_final_users},
                       {"median_convergence", optional_json(s.median_convergence)},
                       {"converged_runs", s.converged_runs},
                       {"nonterminal", s.nonterminal},
                       {"saving_vs_baseline", optional_json(s.saving_vs_baseline)},
                       {"saving_vs_random", optional_json(s.saving_vs_random)}});
  }
  return json{{"kind", bundle.kind}, {"reports", reports}, {"summary", summary}}.dump(1);
}

StudyBundle bundle_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    StudyBundle bundle;
    bundle.kind = j.at("kind").get<std::string>();
    for (const json& r : j.at("reports")) {
      ExperimentReport rep;
      rep.technique = r.at("technique").get<std::string>();
      rep.phase = r.at("phase").get<std::string>();
      rep.seed = r.at("seed").get<std::uint64_t>();
      for (const json& e : r.at("episodes"))
        rep.episodes.push_back({e[0].get<std::size_t>(), e[1].get<std::int64_t>(), e[2].get<bool>(),
                                {e[3].get<double>(), e[4].get<double>()}});
      if (!r.at("convergence_episode").is_null())
        rep.convergence_episode = r.at("convergence_episode").get<std::size_t>();
      rep.window_mean = r.at("window_mean").get<double>();
      rep.window_stddev = r.at("window_stddev").get<double>();
      rep.nonterminal = r.at("nonterminal").get<std::size_t>();
      if (!r.at("failure").is_null()) rep.failure = r.at("failure").get<std::string>();
      bundle.reports.push_back(std::move(rep));
    }
    for (const json& s : j.at("summary")) {
      SummaryRow row;
      row.technique = s.at("technique").get<std::string>();
      row.phase = s.at("phase").get<std::string>();
      row.runs = s.at("runs").get<std::size_t>();
      row.mean_final_users = s.at("mean_final_users").get<double>();
      row.stddev_final_users = s.at("stddev_final_users").get<double>();
      row.median_convergence = optional_double(s.at("median_convergence"));
      row.converged_runs = s.at("converged_runs").get<std::size_t>();
      row.nonterminal = s.at("nonterminal").get<std::size_t>();
      row.saving_vs_baseline = optional_double(s.at("saving_vs_baseline"));
      row.saving_vs_random = optional_double(s.at("saving_vs_random"));
      bundle.summary.push_back(std::move(row));
    }
    return bundle;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("malformed report bundle: ") + e.what());
  }
}

std::string report_file_stem(const ExperimentReport& report) {
  std::string name = report.technique;
  for (char& c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
  return name + "_" + report.phase + "_seed" + std::to_string(report.seed);
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> write_bundle(const StudyBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& r : bundle.reports) {
    const auto stem = report_file_stem(r);
    written.push_back(dir / (stem + ".csv"));
    write_text(written.back(), report_csv(r));
    written.push_back(dir / (stem + ".svg"));
    write_text(written.back(), report_svg(r));
  }
  written.push_back(dir / "summary.csv");
  write_text(written.back(), summary_csv(bundle.summary));
  written.push_back(dir / "bundle.json");
  write_text(written.back(), bundle_to_json(bundle));
  return written;
}

}  // namespace reload
