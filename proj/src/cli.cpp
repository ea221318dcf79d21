#include "pbmrf/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "pbmrf/elimination.hpp"
#include "pbmrf/errors.hpp"
#include "pbmrf/inference_apps.hpp"
#include "pbmrf/parallel.hpp"

namespace pbmrf {

namespace {

using Json = nlohmann::json;

struct Cell {
  std::string text;
  bool numeric = false;
};

Cell num(double v) { return {format_real(v), true}; }
Cell num(std::size_t v) { return {std::to_string(v), true}; }
Cell str(std::string s) { return {std::move(s), false}; }

std::string state_string(const State& x) {
  std::string s;
  s.reserve(x.size());
  for (auto v : x) s += v ? '1' : '0';
  return s;
}

struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  // Written to the JSON output, and to the diagnostic stream for CSV.
  std::vector<std::pair<std::string, Cell>> summary;
  // Set by `sample` for the binary format.
  std::optional<SampleBatch> batch;
};

// Command-line values; unset ones fall back to the config file.
struct Flags {
  std::string config;
  std::optional<std::string> nu;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> format;
  bool timing = false;
};

struct RunConfig {
  std::string command;
  ModelConfig model;
  std::vector<std::size_t> nu{1};
  EliminationMode mode = EliminationMode::approximate;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out;
  std::string format = "csv";
  bool timing = false;
  std::vector<Index> order;
  std::optional<std::size_t> table_cap;
  Json doc;
};

const std::set<std::string> kKnownKeys = {
    "model", "nu",    "mode", "seed",  "jobs",       "out",        "format",
    "order", "table_cap", "count", "pomm_variant", "sweeps", "burn_in", "thin",
    "y",     "mu0",   "mu1",  "sigma", "x",          "grid",       "grid_points",
    "acceptance_floor", "trial_budget", "pairs", "reference"};

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw InvalidArgument("config key '" + key + "': " + why);
}

template <class T>
T get_value(const Json& doc, const std::string& key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception& e) {
    bad_key(key, e.what());
  }
}

std::size_t get_count(const Json& doc, const std::string& key, std::size_t fallback,
                      std::size_t minimum = 0) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
    bad_key(key, "expected an integer >= " + std::to_string(minimum));
  }
  return v.get<std::size_t>();
}

EliminationMode parse_mode(const std::string& s) {
  if (s == "exact") return EliminationMode::exact;
  if (s == "approx") return EliminationMode::approximate;
  if (s == "lower") return EliminationMode::lower_bound;
  if (s == "upper") return EliminationMode::upper_bound;
  throw InvalidArgument("unknown mode '" + s + "' (expected exact, approx, lower or upper)");
}

std::size_t parse_positive(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9) {
    throw InvalidArgument("bad nu value '" + s + "'");
  }
  const auto v = std::stoul(s);
  if (v == 0) throw InvalidArgument("nu must be >= 1");
  return v;
}

// "1,2,5-8" -> 1 2 5 6 7 8
std::vector<std::size_t> parse_nu_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto dash = token.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_positive(token));
      continue;
    }
    const auto lo = parse_positive(token.substr(0, dash));
    const auto hi = parse_positive(token.substr(dash + 1));
    if (hi < lo) throw InvalidArgument("bad nu range '" + token + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty nu list");
  return out;
}

RunConfig load_config(const std::string& command, const Flags& flags) {
  std::ifstream in(flags.config);
  if (!in) throw InvalidArgument("cannot read config file '" + flags.config + "'");
  std::stringstream text;
  text << in.rdbuf();
  RunConfig rc;
  rc.command = command;
  try {
    rc.doc = Json::parse(text.str());
  } catch (const Json::exception& e) {
    throw InvalidArgument("config file '" + flags.config + "': " + e.what());
  }
  if (!rc.doc.is_object()) throw InvalidArgument("config file must hold a JSON object");
  for (const auto& [key, value] : rc.doc.items()) {
    if (!kKnownKeys.contains(key)) bad_key(key, "unknown key");
  }
  if (!rc.doc.contains("model")) throw InvalidArgument("config file has no 'model'");
  rc.model = model_config_from_json(rc.doc.at("model").dump());

  if (rc.doc.contains("nu")) {
    const auto& v = rc.doc.at("nu");
    if (v.is_string()) {
      rc.nu = parse_nu_list(v.get<std::string>());
    } else if (v.is_number_integer()) {
      rc.nu = parse_nu_list(std::to_string(v.get<long long>()));
    } else if (v.is_array()) {
      rc.nu.clear();
      for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<long long>() < 1) bad_key("nu", "entries must be >= 1");
        rc.nu.push_back(e.get<std::size_t>());
      }
      if (rc.nu.empty()) bad_key("nu", "empty list");
    } else {
      bad_key("nu", "expected an integer, a list or a string such as \"1-8\"");
    }
  }
  rc.mode = parse_mode(get_value<std::string>(rc.doc, "mode", "approx"));
  rc.seed = get_value<std::uint64_t>(rc.doc, "seed", 1);
  rc.jobs = get_count(rc.doc, "jobs", 1, 1);
  rc.out = get_value<std::string>(rc.doc, "out", "");
  rc.format = get_value<std::string>(rc.doc, "format", "csv");
  rc.order = get_value<std::vector<Index>>(rc.doc, "order", {});
  if (rc.doc.contains("table_cap")) rc.table_cap = get_count(rc.doc, "table_cap", 0, 1);

  if (flags.nu) rc.nu = parse_nu_list(*flags.nu);
  if (flags.mode) rc.mode = parse_mode(*flags.mode);
  if (flags.seed) rc.seed = *flags.seed;
  if (flags.jobs) rc.jobs = *flags.jobs;
  if (flags.out) rc.out = *flags.out;
  if (flags.format) rc.format = *flags.format;
  rc.timing = flags.timing;

  if (rc.jobs == 0) throw InvalidArgument("jobs must be >= 1");
  const bool binary_ok = command == "sample";
  if (rc.format != "csv" && rc.format != "json" && !(binary_ok && rc.format == "binary")) {
    throw InvalidArgument("unsupported format '" + rc.format + "' for " + command);
  }
  return rc;
}

EliminationConfig base_config(const RunConfig& rc, std::size_t nu, EliminationMode mode) {
  EliminationConfig cfg;
  cfg.order = rc.order;
  cfg.nu = nu;
  cfg.mode = mode;
  cfg.table_cap = rc.table_cap;
  return cfg;
}

std::size_t single_nu(const RunConfig& rc) {
  if (rc.nu.size() != 1) throw InvalidArgument(rc.command + " takes a single nu");
  return rc.nu.front();
}

PommVariant pomm_variant(const RunConfig& rc, PommVariant fallback) {
  if (!rc.doc.contains("pomm_variant")) return fallback;
  const auto s = get_value<std::string>(rc.doc, "pomm_variant", "");
  if (s == "pre") return PommVariant::pre_approximation;
  if (s == "post") return PommVariant::post_approximation;
  bad_key("pomm_variant", "expected \"pre\" or \"post\"");
}

Report cmd_norm(const RunConfig& rc, const MarkovRandomField& m) {
  Report r;
  r.columns = {"nu", "log_c_approx", "log_c_lower", "log_c_upper", "gap"};
  if (rc.timing) r.columns.push_back("wall_seconds");
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  if (rc.mode == EliminationMode::exact) {
    const auto start = Clock::now();
    const double v = eliminate(m.energy, base_config(rc, 1, EliminationMode::exact)).log_value;
    r.rows.push_back({str("exact"), num(v), num(v), num(v), num(0.0)});
    if (rc.timing) r.rows.back().push_back(num(seconds(start)));
    return r;
  }
  r.rows.resize(rc.nu.size());
  parallel_for(rc.nu.size(), rc.jobs, [&](std::size_t k) {
    const auto nu = rc.nu[k];
    const auto start = Clock::now();
    const double approx =
        eliminate(m.energy, base_config(rc, nu, EliminationMode::approximate)).log_value;
    const double lower =
        eliminate(m.energy, base_config(rc, nu, EliminationMode::lower_bound)).log_value;
    const double upper =
        eliminate(m.energy, base_config(rc, nu, EliminationMode::upper_bound)).log_value;
    r.rows[k] = {num(nu), num(approx), num(lower), num(upper), num(upper - lower)};
    if (rc.timing) r.rows[k].push_back(num(seconds(start)));
  });
  return r;
}

Report batch_report(const SampleBatch& batch, const char* value_column) {
  Report r;
  r.columns = {"state", value_column};
  for (std::size_t k = 0; k < batch.states.size(); ++k) {
    r.rows.push_back({str(state_string(batch.states[k])), num(batch.log_densities[k])});
  }
  return r;
}

Report cmd_sample(const RunConfig& rc, const MarkovRandomField& m) {
  if (rc.mode != EliminationMode::exact && rc.mode != EliminationMode::approximate) {
    throw InvalidArgument("sample needs mode exact or approx");
  }
  auto cfg = base_config(rc, single_nu(rc), rc.mode);
  cfg.pomm_variant = pomm_variant(rc, PommVariant::post_approximation);
  const auto count = get_count(rc.doc, "count", 1000);
  const auto batch = sample(*eliminate(m.energy, cfg).pomm, rc.seed, count);
  auto r = batch_report(batch, "log_density");
  r.batch = batch;
  return r;
}

Report cmd_gibbs(const RunConfig& rc, const MarkovRandomField& m) {
  const auto sweeps = get_count(rc.doc, "sweeps", 1000);
  const auto burn_in = get_count(rc.doc, "burn_in", 100);
  const auto thin = get_count(rc.doc, "thin", 1, 1);
  return batch_report(gibbs_sampler(m, sweeps, burn_in, thin, rc.seed), "energy");
}

Report cmd_map(const RunConfig& rc, const MarkovRandomField& m) {
  if (!rc.doc.contains("y")) throw InvalidArgument("map needs observations 'y'");
  const auto y = get_value<std::vector<double>>(rc.doc, "y", {});
  const GaussianLikelihoodSpec lik{get_value<double>(rc.doc, "mu0", 0.0),
                                   get_value<double>(rc.doc, "mu1", 1.0),
                                   get_value<double>(rc.doc, "sigma", 1.0)};
  const auto post = posterior_energy(y, m, lik);
  Report r;
  r.columns = {"nu", "mode", "max_value", "energy_at_state", "state"};
  const bool exact = rc.mode == EliminationMode::exact;
  const std::vector<std::size_t> nus = exact ? std::vector<std::size_t>{1} : rc.nu;
  r.rows.resize(nus.size());
  parallel_for(nus.size(), rc.jobs, [&](std::size_t k) {
    auto cfg = base_config(rc, nus[k], rc.mode);
    cfg.marginal = Marginal::max;
    const auto res = eliminate(post, cfg);
    r.rows[k] = {exact ? str("exact") : num(nus[k]), str(std::string(mode_name(rc.mode))),
                 num(res.log_value), num(post.evaluate(*res.argmax)),
                 str(state_string(*res.argmax))};
  });
  return r;
}

Report cmd_mle(const RunConfig& rc, const MarkovRandomField& m) {
  const auto n = m.lattice.size();
  State x;
  if (rc.doc.contains("x")) {
    const auto values = get_value<std::vector<int>>(rc.doc, "x", {});
    if (values.size() != n) bad_key("x", "expected " + std::to_string(n) + " entries");
    for (int v : values) {
      if (v != 0 && v != 1) bad_key("x", "entries must be 0 or 1");
      x.push_back(static_cast<std::uint8_t>(v));
    }
  } else {
    // No observation given: draw one from the configured model.
    const auto burn_in = get_count(rc.doc, "burn_in", 500);
    x = gibbs_sampler(m, 1, burn_in, 1, rc.seed).states.front();
  }
  if (!rc.doc.contains("grid")) throw InvalidArgument("mle needs a 'grid'");
  auto grid = get_value<std::vector<double>>(rc.doc, "grid", {});
  MleOptions options;
  options.grid_points = get_count(rc.doc, "grid_points", 11, 3);
  options.jobs = rc.jobs;
  options.table_cap = rc.table_cap;
  if (grid.size() == 2) {
    const double lo = grid[0];
    const double hi = grid[1];
    grid.resize(options.grid_points);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid.size() - 1);
    }
  }
  // Capping at n never approximates, so the bounds are exact.
  const auto schedule = rc.mode == EliminationMode::exact ? std::vector<std::size_t>{n} : rc.nu;
  const auto b = mle_bracket(x, m.family, m.lattice, grid, schedule, options);
  Report r;
  r.columns = {"round", "nu", "theta_lo", "theta_hi", "cut"};
  for (std::size_t k = 0; k < b.rounds.size(); ++k) {
    const auto& round = b.rounds[k];
    r.rows.push_back(
        {num(k), num(round.nu), num(round.theta_lo), num(round.theta_hi), num(round.cut)});
  }
  r.summary = {{"theta_lo", num(b.theta_lo)},
               {"theta_hi", num(b.theta_hi)},
               {"observed", str(state_string(x))}};
  return r;
}

Report cmd_reject(const RunConfig& rc, const MarkovRandomField& m) {
  const auto nu = rc.mode == EliminationMode::exact ? m.lattice.size() : single_nu(rc);
  RejectionOptions options;
  options.acceptance_floor = get_value<double>(rc.doc, "acceptance_floor", 1e-3);
  options.trial_budget = get_count(rc.doc, "trial_budget", 100000, 1);
  options.table_cap = rc.table_cap;
  const auto count = get_count(rc.doc, "count", 1000);
  const auto res = rejection_sampler(m, nu, rc.seed, count, options);
  auto r = batch_report(res.batch, "energy");
  r.summary = {{"nu", num(nu)},
               {"trials", num(res.trials)},
               {"acceptance_rate", num(res.acceptance_rate)},
               {"log_k", num(res.log_k)},
               {"max_alpha", num(res.max_alpha)}};
  return r;
}

Report cmd_mh_rate(const RunConfig& rc, const MarkovRandomField& m) {
  const auto pairs = get_count(rc.doc, "pairs", 1000, 1);
  const auto kind = get_value<std::string>(rc.doc, "reference", "exact");
  ReferenceSampler reference;
  std::optional<PartiallyOrderedMarkovModel> exact_pomm;
  if (kind == "exact") {
    auto cfg = base_config(rc, 1, EliminationMode::exact);
    cfg.pomm_variant = PommVariant::post_approximation;
    exact_pomm = eliminate(m.energy, cfg).pomm;
    reference = [&exact_pomm](std::size_t count, std::uint64_t seed) {
      return sample(*exact_pomm, seed, count).states;
    };
  } else if (kind == "gibbs") {
    reference = gibbs_reference(m, get_count(rc.doc, "burn_in", 100),
                                get_count(rc.doc, "thin", 1, 1));
  } else {
    bad_key("reference", "expected \"exact\" or \"gibbs\"");
  }
  const auto variant = pomm_variant(rc, PommVariant::pre_approximation);
  Report r;
  r.columns = {"nu", "rate"};
  const bool exact = rc.mode == EliminationMode::exact;
  if (!exact && rc.mode != EliminationMode::approximate) {
    throw InvalidArgument("mh-rate needs mode exact or approx");
  }
  const std::vector<std::size_t> nus = exact ? std::vector<std::size_t>{1} : rc.nu;
  r.rows.resize(nus.size());
  parallel_for(nus.size(), rc.jobs, [&](std::size_t k) {
    auto cfg = base_config(rc, nus[k], rc.mode);
    cfg.pomm_variant = variant;
    const auto pomm = *eliminate(m.energy, cfg).pomm;
    const double rate = mh_acceptance_rate(m, pomm, reference, pairs, rc.seed);
    r.rows[k] = {exact ? str("exact") : num(nus[k]), num(rate)};
  });
  return r;
}

void write_json_value(std::ostream& os, const Cell& c) {
  // JSON has no literal for infinities or NaN, so those are written as strings.
  const bool finite_number =
      c.numeric && c.text.find_first_of("in") == std::string::npos;
  if (finite_number) {
    os << c.text;
  } else {
    os << Json(c.text).dump();
  }
}

void write_report(std::ostream& os, std::ostream& err, const std::string& command,
                  const Report& r, const std::string& format) {
  if (format == "binary") {
    write_samples_binary(os, *r.batch, r.batch->states.empty() ? 0 : r.batch->states[0].size());
    return;
  }
  if (format == "csv") {
    for (std::size_t c = 0; c < r.columns.size(); ++c) os << (c ? "," : "") << r.columns[c];
    os << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c].text;
      os << '\n';
    }
    for (const auto& [key, value] : r.summary) err << key << ": " << value.text << '\n';
    return;
  }
  os << "{\n  \"command\": " << Json(command).dump() << ",\n  \"summary\": {";
  for (std::size_t k = 0; k < r.summary.size(); ++k) {
    os << (k ? ", " : "") << Json(r.summary[k].first).dump() << ": ";
    write_json_value(os, r.summary[k].second);
  }
  os << "},\n  \"rows\": [";
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    os << (k ? ",\n    {" : "\n    {");
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      os << (c ? ", " : "") << Json(r.columns[c]).dump() << ": ";
      write_json_value(os, r.rows[k][c]);
    }
    os << '}';
  }
  os << (r.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"norm", "bound and approximate ln c over a nu sweep"},
    {"sample", "draw states from the POMM surrogate"},
    {"gibbs", "run a single-site Gibbs chain"},
    {"map", "MAP estimate under a Gaussian noise model"},
    {"mle", "bracket the maximum-likelihood parameter"},
    {"reject", "exact samples by rejection from the POMM"},
    {"mh-rate", "Metropolis-Hastings acceptance rate of the POMM proposal"},
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudo-Boolean elimination for binary Markov random fields", "pbmrf"};
  app.require_subcommand(1);
  Flags flags;
  std::string command;
  for (const auto& [name, help] : kCommands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--nu", flags.nu, "nu values, e.g. 1,2,5-8");
    sub->add_option("--mode", flags.mode, "exact|approx|lower|upper");
    sub->add_option("--seed", flags.seed, "random seed");
    sub->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", flags.out, "output file (default: standard output)");
    sub->add_option("--format", flags.format,
                    name == "sample" ? "csv|json|binary" : "csv|json");
    if (name == "norm") sub->add_flag("--timing", flags.timing, "add a wall_seconds column");
    sub->callback([&command, n = name] { command = n; });
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto rc = load_config(command, flags);
    const auto model = build_model(rc.model);
    Report report;
    if (command == "norm") report = cmd_norm(rc, model);
    else if (command == "sample") report = cmd_sample(rc, model);
    else if (command == "gibbs") report = cmd_gibbs(rc, model);
    else if (command == "map") report = cmd_map(rc, model);
    else if (command == "mle") report = cmd_mle(rc, model);
    else if (command == "reject") report = cmd_reject(rc, model);
    else report = cmd_mh_rate(rc, model);

    std::ostringstream buffer;
    write_report(buffer, err, command, report, rc.format);
    if (rc.out.empty()) {
      out << buffer.str();
    } else {
      std::ofstream file(rc.out, std::ios::binary);
      if (!file) throw InvalidArgument("cannot open output file '" + rc.out + "'");
      file << buffer.str();
    }
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    err << "pbmrf: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResourceLimitExceeded& e) {
    err << "pbmrf: resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    err << "pbmrf: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace pbmrf
