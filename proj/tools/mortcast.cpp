// mortcast: command-line driver for ingestion, synthesis, fitting,
// forecasting, hyperparameter search and the benchmark.
//
// Exit codes: 0 success, 1 runtime failure (or failed benchmark cells),
// 2 invalid command line or config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mortcast/arima.hpp"
#include "mortcast/demographic.hpp"
#include "mortcast/error.hpp"
#include "mortcast/evaluation.hpp"
#include "mortcast/hpo.hpp"
#include "mortcast/hybrid.hpp"
#include "mortcast/neural.hpp"
#include "mortcast/record.hpp"
#include "mortcast/strategy.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using namespace mortcast;
namespace demo = mortcast::demographic;
namespace eval = mortcast::evaluation;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  // ingest only
  std::string input;
  std::optional<int> from, to;
};

// --- config access

void allow(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : keys) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("unknown key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
  }
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' has the wrong type");
  }
}

template <class T>
T need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " needs '" + key + "'");
  return get<T>(j, key, T{});
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  try {
    auto j = json::parse(in);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

// --- datasets

struct Source {
  std::optional<std::string> input;
  std::optional<demo::SynthParams> synth;
  std::uint64_t synth_seed = 0;
  demo::YearFilter years;
  ojson resolved;
};

demo::SynthParams synth_params(const json& j, ojson& resolved) {
  allow(j, "synthetic", {"first_year", "n_years", "k0", "drift", "k_sigma", "noise", "male_offset", "seed"});
  auto p = demo::SynthParams::standard();
  p.first_year = get(j, "first_year", 1950);
  p.n_years = get(j, "n_years", 70);
  p.k0 = get(j, "k0", p.k0);
  p.drift = get(j, "drift", -1.0);
  p.k_sigma = get(j, "k_sigma", 1.0);
  p.noise = get(j, "noise", 0.02);
  p.male_offset = get(j, "male_offset", 0.2);
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("synthetic: ") + e.what());
  }
  resolved = {{"first_year", p.first_year}, {"n_years", p.n_years}, {"k0", p.k0},       {"drift", p.drift},
              {"k_sigma", p.k_sigma},       {"noise", p.noise},     {"male_offset", p.male_offset}};
  return p;
}

Source source(const json& j, std::uint64_t master_seed) {
  Source s;
  const bool has_input = j.contains("input"), has_synth = j.contains("synthetic");
  if (has_input == has_synth) throw ConfigError("a dataset needs exactly one of 'input' or 'synthetic'");
  if (has_input) {
    s.input = need<std::string>(j, "input", "dataset");
    s.resolved["input"] = *s.input;
  } else {
    ojson r;
    s.synth = synth_params(j.at("synthetic"), r);
    s.synth_seed = get<std::uint64_t>(j.at("synthetic"), "seed", master_seed);
    r["seed"] = s.synth_seed;
    s.resolved["synthetic"] = r;
  }
  return s;
}

demo::MortalitySurface load(const Source& s) {
  if (s.synth) return demo::synthesize_surface(*s.synth, s.synth_seed);
  std::ifstream in(*s.input);
  if (!in) throw DataError("cannot open " + *s.input);
  try {
    return demo::parse_surface(in, s.years);
  } catch (const ParseError& e) {
    throw ParseError(*s.input + ": " + e.what(), e.line());
  } catch (const DataError& e) {
    throw DataError(*s.input + ": " + e.what());
  }
}

demo::Sex sex_of(const json& j) {
  try {
    return demo::parse_sex(get<std::string>(j, "sex", "total"));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

std::pair<int, int> year_pair(const json& j, const char* key, const std::string& where) {
  const auto v = need<std::vector<int>>(j, key, where);
  if (v.size() != 2 || v[0] > v[1]) throw ConfigError(where + "." + key + " must be [first, last]");
  return {v[0], v[1]};
}

// --- outputs

fs::path out_dir(const Flags& f, const json& cfg) {
  return f.out ? fs::path(*f.out) : fs::path(get<std::string>(cfg, "out", "mortcast-out"));
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot write " + p.string());
  os << text;
}

void echo_config(const fs::path& dir, const ojson& resolved) {
  fs::create_directories(dir);
  write_file(dir / "run_config.json", resolved.dump(2) + "\n");
}

std::uint64_t master_seed(const Flags& f, const json& cfg) {
  return f.seed ? *f.seed : get<std::uint64_t>(cfg, "seed", 0);
}

int jobs_of(const Flags& f, const json& cfg) {
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  const int j = f.jobs ? *f.jobs : get(cfg, "jobs", hw);
  if (j < 1) throw ConfigError("jobs must be positive");
  return j;
}

std::string summary(const demo::MortalitySurface& s) {
  return std::to_string(s.n_years()) + " years, " + std::to_string(demo::kAgeCount) + " ages, 3 sexes (" +
         std::to_string(s.first_year()) + "-" + std::to_string(s.last_year()) + ")";
}

// --- network settings shared by fit and hpo

neural::NetworkSpec network(const json& j, neural::Family family, ojson& resolved) {
  allow(j, "network", {"hidden_units", "learning_rate", "activation", "hidden_layers", "max_iterations"});
  neural::NetworkSpec s;
  s.family = family;
  s.hidden_units = get(j, "hidden_units", 8);
  s.learning_rate = get(j, "learning_rate", 1e-2);
  s.n_hidden_layers = family == neural::Family::NBEATS ? get(j, "hidden_layers", 1) : 1;
  s.max_iterations = get(j, "max_iterations", 500);
  try {
    s.activation = family == neural::Family::MLP ? neural::parse_activation(get<std::string>(j, "activation", "tanh"))
                                                 : neural::Activation::Tanh;
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  resolved = {{"hidden_units", s.hidden_units},
              {"learning_rate", s.learning_rate},
              {"activation", neural::to_string(s.activation)},
              {"hidden_layers", s.n_hidden_layers},
              {"max_iterations", s.max_iterations}};
  return s;
}

eval::ModelId model_of(const json& cfg) { return eval::parse_model(need<std::string>(cfg, "model", "config")); }

/// Log series of one age over [first, last].
TimeSeries log_series(const demo::MortalitySurface& s, int age, demo::Sex sex, int first, int last) {
  const auto sub = s.restrict(first, last);
  std::vector<double> v;
  for (double r : sub.age_profile(age, sex)) v.push_back(std::log(r));
  return TimeSeries(std::move(v), first);
}

// --- commands

int cmd_synth(const Flags& f) {
  const json cfg = load_config(f.config);
  allow(cfg, "", {"synthetic", "seed", "out"});
  ojson r;
  const auto p = synth_params(cfg.value("synthetic", json::object()), r);
  const auto seed = master_seed(f, cfg);
  const auto dir = out_dir(f, cfg);
  const auto surface = demo::synthesize_surface(p, seed);
  echo_config(dir, ojson{{"command", "synth"}, {"seed", seed}, {"synthetic", r}, {"out", dir.string()}});
  write_file(dir / "surface.txt", demo::serialize(surface));
  std::cout << summary(surface) << "\n";
  return 0;
}

int cmd_ingest(const Flags& f) {
  const json cfg = load_config(f.config);
  allow(cfg, "", {"input", "years", "out"});
  Source s;
  s.input = f.input.empty() ? get<std::string>(cfg, "input", "") : f.input;
  if (s.input->empty()) throw ConfigError("ingest needs an input file");
  if (cfg.contains("years")) {
    const auto [a, b] = year_pair(cfg, "years", "config");
    s.years = {a, b};
  }
  if (f.from) s.years.first = f.from;
  if (f.to) s.years.last = f.to;
  const auto dir = out_dir(f, cfg);
  const auto surface = load(s);
  ojson r{{"command", "ingest"}, {"input", *s.input}};
  r["years"] = {s.years.first ? ojson(*s.years.first) : ojson(nullptr), s.years.last ? ojson(*s.years.last) : ojson(nullptr)};
  r["out"] = dir.string();
  echo_config(dir, r);
  write_file(dir / "surface.txt", demo::serialize(surface));
  std::cout << summary(surface) << "\n";
  return 0;
}

struct SeriesJob {
  Source src;
  demo::Sex sex = demo::Sex::Total;
  int age = 0;
  int first = 0, last = 0;
  ojson resolved;
};

SeriesJob series_job(const json& cfg, std::uint64_t seed, bool need_age) {
  SeriesJob job;
  job.src = source(need<json>(cfg, "data", "config"), seed);
  allow(cfg.at("data"), "data", {"input", "synthetic"});
  job.sex = sex_of(cfg);
  if (need_age) {
    job.age = need<int>(cfg, "age", "config");
    if (job.age < 0 || job.age > demo::kMaxAge) throw ConfigError("age must lie in 0..100");
  }
  std::tie(job.first, job.last) = year_pair(cfg, "train", "config");
  job.resolved = {{"data", job.src.resolved}, {"sex", demo::to_string(job.sex)}};
  if (need_age) job.resolved["age"] = job.age;
  job.resolved["train"] = {job.first, job.last};
  return job;
}

int cmd_fit(const Flags& f) {
  const json cfg = load_config(f.config);
  allow(cfg, "", {"data", "sex", "age", "train", "model", "horizon", "lags", "arima", "network", "seed", "out"});
  const auto seed = master_seed(f, cfg);
  const auto id = model_of(cfg);
  const bool lc = id.kind == eval::ModelId::Kind::LeeCarter;
  auto job = series_job(cfg, seed, !lc);
  const int H = get(cfg, "horizon", 10);
  const int d = get(cfg, "lags", neural::kDefaultInputWidth);
  if (H < 1 || d < 1) throw ConfigError("horizon and lags must be positive");
  hybrid::ArimaConfig arima_cfg;
  ojson r{{"command", "fit"}, {"seed", seed}, {"model", id.name()}};
  r.update(job.resolved);
  r["horizon"] = H;
  if (cfg.contains("arima")) {
    const auto& a = cfg.at("arima");
    allow(a, "arima", {"order"});
    const auto o = need<std::vector<int>>(a, "order", "arima");
    if (o.size() != 3) throw ConfigError("arima.order must be [p, d, q]");
    arima_cfg.order = arima::ArimaOrder{o[0], o[1], o[2]};
    r["arima"] = {{"order", o}};
  }
  neural::NetworkSpec spec;
  const bool networked = id.kind == eval::ModelId::Kind::Single || id.kind == eval::ModelId::Kind::Hybrid;
  if (networked) {
    ojson net;
    spec = network(cfg.value("network", json::object()), id.family, net);
    spec.input_width = d;
    spec.output_width = strategy::output_width(id.mode, H);
    r["lags"] = d;
    r["network"] = net;
  } else if (cfg.contains("network")) {
    throw ConfigError("model " + id.name() + " takes no network settings");
  }
  const auto dir = out_dir(f, cfg);
  r["out"] = dir.string();

  const auto surface = load(job.src);
  std::vector<Record> records;
  Record head("fit");
  head.set("model", id.name());
  head.set("sex", demo::to_string(job.sex));
  head.set("first_year", job.first);
  head.set("last_year", job.last);
  if (lc) {
    const auto p = demo::fit_lee_carter(surface.restrict(job.first, job.last), job.sex);
    Record rec("lee_carter");
    rec.set("first_year", p.first_year);
    rec.set("a", p.a);
    rec.set("b", p.b);
    rec.set("k", p.k);
    rec.set("drift", p.drift);
    rec.set("innovation_variance", p.innovation_variance);
    records = {head, rec};
    std::cout << "lee-carter drift " << p.drift << " (se " << p.drift_standard_error() << ")\n";
  } else {
    const auto series = log_series(surface, job.age, job.sex, job.first, job.last);
    head.set("age", job.age);
    head.set("history", series.data());
    records.push_back(head);
    if (id.kind == eval::ModelId::Kind::Arima) {
      const auto m = hybrid::fit_linear(series.values(), arima_cfg);
      records.push_back(arima::to_record(m));
      std::cout << "arima(" << m.order.p << "," << m.order.d << "," << m.order.q << ") sigma2 " << m.sigma2 << "\n";
    } else if (id.kind == eval::ModelId::Kind::Single) {
      for (auto& rec : strategy::to_records(strategy::fit_strategy(series, id.mode, d, H, spec, seed)))
        records.push_back(std::move(rec));
    } else {
      const auto m = hybrid::fit_hybrid(series, arima_cfg, spec, id.mode, d, H, seed);
      for (auto& rec : hybrid::to_records(m)) records.push_back(std::move(rec));
      std::cout << "linear part arima(" << m.linear.order.p << "," << m.linear.order.d << "," << m.linear.order.q
                << ")\n";
    }
  }
  echo_config(dir, r);
  write_file(dir / "model.txt", to_text(records));
  std::cout << "wrote " << (dir / "model.txt").string() << "\n";
  return 0;
}

int cmd_forecast(const Flags& f) {
  const json cfg = load_config(f.config);
  allow(cfg, "", {"model_file", "horizon", "out"});
  const auto path = need<std::string>(cfg, "model_file", "config");
  const int H = get(cfg, "horizon", 10);
  if (H < 1) throw ConfigError("horizon must be positive");
  const auto dir = out_dir(f, cfg);

  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  const auto records = read_records(in);
  if (records.empty() || records[0].kind() != "fit") throw ParseError(path + ": expected a fit record", 1);
  const auto& head = records[0];
  const auto id = eval::parse_model(head.text("model"));
  const int last = int(head.integer("last_year"));

  std::ostringstream os;
  char buf[96];
  if (id.kind == eval::ModelId::Kind::LeeCarter) {
    if (records.size() != 2) throw ParseError(path + ": expected a lee_carter record", 2);
    demo::LeeCarterParams p;
    p.first_year = int(records[1].integer("first_year"));
    p.a = records[1].numbers("a");
    p.b = records[1].numbers("b");
    p.k = records[1].numbers("k");
    p.drift = records[1].number("drift");
    p.innovation_variance = records[1].number("innovation_variance");
    demo::write_curves_csv(os, last + 1, demo::forecast_lee_carter(p, H));
  } else {
    const auto history = head.numbers("history");
    std::vector<double> fc;
    const std::vector<Record> rest(records.begin() + 1, records.end());
    if (id.kind == eval::ModelId::Kind::Arima) {
      fc = arima::forecast(arima::from_record(rest.at(0)), H);
    } else if (id.kind == eval::ModelId::Kind::Single) {
      fc = strategy::forecast(strategy::from_records(rest), history, H);
    } else {
      fc = hybrid::forecast_hybrid(hybrid::from_records(rest), H);
    }
    os << "year,log_rate,rate\n";
    for (int h = 0; h < H; ++h) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", last + 1 + h, fc[std::size_t(h)], std::exp(fc[std::size_t(h)]));
      os << buf;
    }
  }
  echo_config(dir, ojson{{"command", "forecast"}, {"model_file", path}, {"horizon", H}, {"out", dir.string()}});
  write_file(dir / "forecast.csv", os.str());
  std::cout << os.str();
  return 0;
}

hpo::OptimizeOptions budget(const json& j, ojson& resolved) {
  allow(j, "hpo", {"n_trials", "n_random", "n_seeds", "n_candidates"});
  hpo::OptimizeOptions o;
  o.n_trials = get(j, "n_trials", o.n_trials);
  o.n_random = get(j, "n_random", o.n_random);
  o.n_seeds = get(j, "n_seeds", o.n_seeds);
  o.n_candidates = get(j, "n_candidates", o.n_candidates);
  if (o.n_trials < 1 || o.n_seeds < 1 || o.n_random < 0 || o.n_candidates < 1) throw ConfigError("invalid hpo budget");
  resolved = {{"n_trials", o.n_trials}, {"n_random", o.n_random}, {"n_seeds", o.n_seeds}, {"n_candidates", o.n_candidates}};
  return o;
}

int cmd_hpo(const Flags& f) {
  const json cfg = load_config(f.config);
  allow(cfg, "", {"data", "sex", "age", "train", "model", "lags", "val_fraction", "hpo", "max_iterations", "seed",
                  "jobs", "out"});
  const auto seed = master_seed(f, cfg);
  const auto id = model_of(cfg);
  if (id.kind != eval::ModelId::Kind::Single && id.kind != eval::ModelId::Kind::Hybrid)
    throw ConfigError("hpo needs a network or hybrid model, got " + id.name());
  auto job = series_job(cfg, seed, true);
  const int d = get(cfg, "lags", neural::kDefaultInputWidth);
  const double vf = get(cfg, "val_fraction", 0.2);
  const int iters = get(cfg, "max_iterations", 500);
  if (d < 1 || !(vf > 0 && vf < 1) || iters < 1) throw ConfigError("lags, val_fraction or max_iterations out of range");
  ojson b;
  auto opts = budget(cfg.value("hpo", json::object()), b);
  opts.jobs = jobs_of(f, cfg);
  const auto dir = out_dir(f, cfg);
  ojson r{{"command", "hpo"}, {"seed", seed}, {"model", id.name()}};
  r.update(job.resolved);
  r["lags"] = d;
  r["val_fraction"] = vf;
  r["max_iterations"] = iters;
  r["hpo"] = b;
  r["jobs"] = opts.jobs;
  r["out"] = dir.string();

  const auto series = log_series(load(job.src), job.age, job.sex, job.first, job.last);
  const auto& v = series.data();
  const auto n_val = std::size_t(std::ceil(vf * double(v.size()) - 1e-9));
  if (n_val < 1 || n_val >= v.size()) throw SplitError("training window cannot hold a validation set");
  const std::vector<double> fit_part(v.begin(), v.end() - std::ptrdiff_t(n_val)), val(v.end() - std::ptrdiff_t(n_val), v.end());
  const auto forecaster = eval::detail::network_forecaster(id, d, iters);
  const auto result = hpo::optimize(hpo::validation_objective(forecaster, fit_part, val),
                                    hpo::SearchSpace::for_family(id.family, d, 1), seed, opts);
  echo_config(dir, r);
  std::ostringstream hist;
  hpo::write_history_csv(hist, result.history);
  write_file(dir / "hpo_history.csv", hist.str());
  const auto& best = result.history[result.best_trial];
  ojson bj{{"model", id.name()},
           {"hidden_units", result.best.hidden_units},
           {"learning_rate", result.best.learning_rate},
           {"activation", neural::to_string(result.best.activation)},
           {"hidden_layers", result.best.n_hidden_layers},
           {"trial", result.best_trial},
           {"mean_rmse", best.mean_rmse},
           {"best_seed", best.best_seed()}};
  write_file(dir / "best.json", bj.dump(2) + "\n");
  std::cout << bj.dump(2) << "\n";
  return 0;
}

int cmd_benchmark(const Flags& f) {
  const json cfg = load_config(f.config);
  allow(cfg, "", {"datasets", "models", "ages", "lags", "val_fraction", "hpo", "max_iterations", "seed_aggregate",
                  "metric", "seed", "jobs", "out"});
  eval::BenchmarkConfig bc;
  bc.master_seed = master_seed(f, cfg);
  bc.jobs = jobs_of(f, cfg);
  ojson r{{"command", "benchmark"}, {"seed", bc.master_seed}, {"jobs", bc.jobs}};

  const auto ds = need<json>(cfg, "datasets", "config");
  if (!ds.is_array() || ds.empty()) throw ConfigError("datasets must be a non-empty list");
  std::vector<std::pair<Source, json>> sources;
  ojson rds = ojson::array();
  for (const auto& d : ds) {
    allow(d, "datasets[]", {"label", "input", "synthetic", "sex", "train", "horizon"});
    auto src = source(d, bc.master_seed);
    eval::Dataset entry;
    entry.label = need<std::string>(d, "label", "dataset");
    entry.sex = sex_of(d);
    std::tie(entry.train_first, entry.train_last) = year_pair(d, "train", entry.label);
    entry.horizon = get(d, "horizon", 10);
    if (entry.horizon < 1) throw ConfigError(entry.label + ": horizon must be positive");
    ojson rd{{"label", entry.label}};
    rd.update(src.resolved);
    rd["sex"] = demo::to_string(entry.sex);
    rd["train"] = {entry.train_first, entry.train_last};
    rd["horizon"] = entry.horizon;
    rds.push_back(rd);
    bc.datasets.push_back(std::move(entry));
    sources.emplace_back(std::move(src), d);
  }
  r["datasets"] = rds;
  bc.models = get(cfg, "models", eval::all_models());
  bc.ages = get(cfg, "ages", bc.ages);
  bc.lags = get(cfg, "lags", bc.lags);
  bc.val_fraction = get(cfg, "val_fraction", bc.val_fraction);
  bc.max_iterations = get(cfg, "max_iterations", bc.max_iterations);
  ojson b;
  bc.hpo = budget(cfg.value("hpo", json::object()), b);
  const auto agg = get<std::string>(cfg, "seed_aggregate", "mean");
  if (agg != "mean" && agg != "best") throw ConfigError("seed_aggregate must be 'mean' or 'best'");
  bc.seed_mean = agg == "mean";
  const auto metric = get<std::string>(cfg, "metric", "curve");
  if (metric != "curve" && metric != "keys") throw ConfigError("metric must be 'curve' or 'keys'");
  bc.curve_metric = metric == "curve";
  const auto dir = out_dir(f, cfg);
  r["models"] = bc.models;
  r["ages"] = bc.ages;
  r["lags"] = bc.lags;
  r["val_fraction"] = bc.val_fraction;
  r["max_iterations"] = bc.max_iterations;
  r["hpo"] = b;
  r["seed_aggregate"] = agg;
  r["metric"] = metric;
  r["out"] = dir.string();

  // validate everything that needs no data before touching the files
  {
    auto probe = bc;
    for (auto& d : probe.datasets) {
      std::array<std::vector<double>, 3> ones;
      for (auto& v : ones) v.assign(std::size_t(d.train_last + d.horizon - d.train_first + 1) * demo::kAgeCount, 1.0);
      d.surface = demo::MortalitySurface(d.train_first, d.train_last + d.horizon - d.train_first + 1, ones);
    }
    probe.validate();
  }
  for (std::size_t i = 0; i < sources.size(); ++i) bc.datasets[i].surface = load(sources[i].first);
  bc.validate();

  const auto report = eval::run_benchmark(bc);
  echo_config(dir, r);
  std::ostringstream csv, tables;
  eval::write_csv(csv, report);
  eval::write_tables(tables, report);
  write_file(dir / "mape.csv", csv.str());
  write_file(dir / "tables.txt", tables.str());
  std::cout << tables.str();
  if (report.failures()) {
    std::cerr << report.failures() << " cell(s) failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mortality forecasting with ARIMA, neural and hybrid models"};
  app.require_subcommand(1);
  Flags flags;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", flags.config, "JSON config file");
    sub->add_option("--seed", flags.seed, "master seed (overrides the config)");
    sub->add_option("--jobs", flags.jobs, "worker threads (default: available cores)");
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
  };
  auto* ingest = app.add_subcommand("ingest", "parse an HMD Mx_1x1 file into a surface");
  common(ingest);
  ingest->add_option("input", flags.input, "HMD file");
  ingest->add_option("--from", flags.from, "first year kept");
  ingest->add_option("--to", flags.to, "last year kept");
  auto* synth = app.add_subcommand("synth", "write a synthetic Lee-Carter surface");
  common(synth);
  auto* fit = app.add_subcommand("fit", "fit one model to one age series (or Lee-Carter to a surface)");
  common(fit);
  auto* forecast = app.add_subcommand("forecast", "forecast from a fitted model file");
  common(forecast);
  auto* search = app.add_subcommand("hpo", "Bayesian hyperparameter search for one series");
  common(search);
  auto* bench = app.add_subcommand("benchmark", "run the three-stage benchmark");
  common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(flags);
    if (*synth) return cmd_synth(flags);
    if (*fit) return cmd_fit(flags);
    if (*forecast) return cmd_forecast(flags);
    if (*search) return cmd_hpo(flags);
    if (*bench) return cmd_benchmark(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
