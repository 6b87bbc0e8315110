#include "pdrtune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "pdrtune/features.hpp"

namespace pdrtune::synth {

namespace fs = std::filesystem;
using aiger::Aig;
using aiger::AndGate;
using aiger::Latch;
using aiger::LatchInit;
using aiger::Literal;
using params::PdrConfig;

// ------------------------------------------------------------- random AIGs

Aig random_aig(Rng& rng, const RandomAigOptions& opts) {
  const unsigned i =
      opts.min_inputs + static_cast<unsigned>(rng.below(opts.max_inputs - opts.min_inputs + 1));
  const unsigned l =
      opts.min_latches + static_cast<unsigned>(rng.below(opts.max_latches - opts.min_latches + 1));
  const unsigned a =
      opts.min_ands + static_cast<unsigned>(rng.below(opts.max_ands - opts.min_ands + 1));

  const double recent_bias = opts.recent_bias >= 0 ? opts.recent_bias : rng.uniform(0.1, 0.85);
  const double latch_skew = opts.latch_skew >= 0 ? opts.latch_skew : rng.uniform(1.0, 4.0);

  // Picks a fanin for the AND with index k (variables 1..i+l+k are available).
  auto pick_var = [&](unsigned k) -> unsigned {
    if (k > 0 && rng.flip(recent_bias)) {
      unsigned window = std::min(k, 8u);
      return i + l + k - static_cast<unsigned>(rng.below(window));
    }
    if (l > 0 && rng.flip(0.5)) {
      // Skewed latch choice so flop fanout distributions vary across circuits.
      double u = rng.uniform();
      unsigned idx = static_cast<unsigned>(std::pow(u, latch_skew) * l);
      return i + 1 + std::min(idx, l - 1);
    }
    return 1 + static_cast<unsigned>(rng.below(i));
  };

  std::vector<AndGate> ands;
  ands.reserve(a);
  for (unsigned k = 0; k < a; ++k) {
    auto pick_lit = [&]() -> Literal {
      if (rng.flip(opts.const_fraction))
        return rng.flip() ? aiger::lit_true : aiger::lit_false;
      return Literal::of_var(pick_var(k), rng.flip());
    };
    ands.push_back({i + l + 1 + k, pick_lit(), pick_lit()});
  }

  std::vector<Latch> latches;
  latches.reserve(l);
  const unsigned max_var = i + l + a;
  for (unsigned k = 0; k < l; ++k) {
    Literal next = Literal::of_var(1 + static_cast<unsigned>(rng.below(max_var)), rng.flip());
    LatchInit init = LatchInit::Zero;
    if (rng.flip(0.3))
      init = LatchInit::One;
    if (opts.allow_x_init && rng.flip(0.1))
      init = LatchInit::X;
    latches.push_back({i + 1 + k, next, init});
  }

  std::vector<Literal> outputs;
  for (unsigned k = 0; k < opts.num_outputs; ++k) {
    unsigned var;
    if (a > 0) {
      // Anchor in the top quarter of the gate list.
      unsigned lo = i + l + 1 + (3 * a) / 4;
      var = lo + static_cast<unsigned>(rng.below(max_var - lo + 1));
    } else {
      var = 1 + static_cast<unsigned>(rng.below(max_var));
    }
    outputs.push_back(Literal::of_var(var, rng.flip()));
  }
  return Aig(i, std::move(latches), std::move(ands), std::move(outputs));
}

// ------------------------------------------------------------ planted model

namespace {

PlantedCoefficients default_coefficients() {
  PlantedCoefficients c;
  // Bit order: g, r, n, c, y, f, i, t, k.
  c.w0 = {0.20, -0.12, 0.10, -0.15, 0.12, -0.10, 0.12, 0.18, -0.12};
  // Flop-fanout spread dominates which generalization flags pay off.
  c.wu = {0.55, 0.00, 0.00, 0.00, -1.30, -0.35, 0.00, 0.00, 0.00};
  // Logic depth has a smaller interaction, through eager pushing.
  c.wv = {0.00, 0.00, 0.25, 0.00, 0.00, 0.00, -0.55, 0.00, 0.00};
  return c;
}

} // namespace

double PlantedCoefficients::expected_log(double flop_std, double avg_level,
                                         const PdrConfig& c) const {
  double u = (flop_std - flop_std_mean) / flop_std_sd;
  double v = (avg_level - avg_level_mean) / avg_level_sd;
  double log_t = intercept + base_u * u + base_v * v;
  auto bits = c.bits();
  for (std::size_t j = 0; j < 9; ++j)
    if (bits[j])
      log_t += w0[j] + wu[j] * u + wv[j] * v;
  return log_t;
}

std::string PlantedCoefficients::to_json() const {
  nlohmann::json j;
  j["intercept"] = intercept;
  j["base_u"] = base_u;
  j["base_v"] = base_v;
  j["w0"] = w0;
  j["wu"] = wu;
  j["wv"] = wv;
  j["noise_sigma"] = noise_sigma;
  j["flop_std_mean"] = flop_std_mean;
  j["flop_std_sd"] = flop_std_sd;
  j["avg_level_mean"] = avg_level_mean;
  j["avg_level_sd"] = avg_level_sd;
  return j.dump(2);
}

PlantedCoefficients PlantedCoefficients::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PlantedCoefficients c;
  c.intercept = j.at("intercept");
  c.base_u = j.at("base_u");
  c.base_v = j.at("base_v");
  auto w0 = j.at("w0").get<std::vector<double>>();
  auto wu = j.at("wu").get<std::vector<double>>();
  auto wv = j.at("wv").get<std::vector<double>>();
  if (w0.size() != 9 || wu.size() != 9 || wv.size() != 9)
    throw Error("planted coefficient arrays must have 9 entries");
  std::copy(w0.begin(), w0.end(), c.w0.begin());
  std::copy(wu.begin(), wu.end(), c.wu.begin());
  std::copy(wv.begin(), wv.end(), c.wv.begin());
  c.noise_sigma = j.at("noise_sigma");
  c.flop_std_mean = j.at("flop_std_mean");
  c.flop_std_sd = j.at("flop_std_sd");
  c.avg_level_mean = j.at("avg_level_mean");
  c.avg_level_sd = j.at("avg_level_sd");
  return c;
}

// ---------------------------------------------------------------- generate

SynthResult generate(const std::string& out_dir, const SynthOptions& opts) {
  if (opts.n_circuits < 10)
    throw Error("synthetic corpus needs at least 10 circuits");
  fs::create_directories(out_dir);

  Rng rng(util::mix_seed(opts.seed, 0x73796e7468ull));
  RandomAigOptions aig_opts;
  aig_opts.min_inputs = opts.min_inputs;
  aig_opts.max_inputs = opts.max_inputs;
  aig_opts.min_latches = opts.min_latches;
  aig_opts.max_latches = opts.max_latches;
  aig_opts.min_ands = opts.min_ands;
  aig_opts.max_ands = opts.max_ands;

  SynthResult result;
  std::vector<Aig> circuits;
  for (int k = 0; k < opts.n_circuits; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%03d", k);
    Aig aig = random_aig(rng, aig_opts);
    util::write_file((fs::path(out_dir) / (std::string(name) + ".aag")).string(),
                     aiger::write_ascii(aig));
    result.circuit_ids.push_back(name);
    circuits.push_back(std::move(aig));
  }

  std::vector<double> flop_std(circuits.size()), avg_level(circuits.size());
  for (std::size_t k = 0; k < circuits.size(); ++k) {
    features::CircuitFeatures f = features::extract(circuits[k]);
    flop_std[k] = f.flop_fanout_std;
    avg_level[k] = f.avg_level;
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v)
      mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v)
      var += (x - mean) * (x - mean);
    double sd = std::sqrt(var / static_cast<double>(v.size()));
    return std::pair<double, double>(mean, sd > 1e-9 ? sd : 1.0);
  };

  PlantedCoefficients coeff = default_coefficients();
  std::tie(coeff.flop_std_mean, coeff.flop_std_sd) = stats(flop_std);
  std::tie(coeff.avg_level_mean, coeff.avg_level_sd) = stats(avg_level);
  result.coefficients = coeff;

  params::ConfigSpace space = params::enumerate_valid();
  for (std::size_t k = 0; k < circuits.size(); ++k) {
    for (const PdrConfig& c : space.configs) {
      double log_t = coeff.expected_log(flop_std[k], avg_level[k], c) +
                     coeff.noise_sigma * rng.normal();
      double seconds = std::exp(log_t);
      train::RuntimeRecord rec;
      rec.circuit_id = result.circuit_ids[k];
      rec.config = c;
      if (seconds >= opts.wall_limit) {
        rec.wall_seconds = opts.wall_limit;
        rec.outcome = train::Outcome::Timeout;
      } else {
        rec.wall_seconds = seconds;
        rec.outcome = train::Outcome::Safe;
      }
      result.records.push_back(std::move(rec));
    }
  }

  util::write_file((fs::path(out_dir) / "runtimes.csv").string(),
                   train::dataset_csv(result.records));
  util::write_file((fs::path(out_dir) / "manifest.json").string(), coeff.to_json());
  return result;
}

} // namespace pdrtune::synth
