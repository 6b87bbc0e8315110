#include "pdrtune/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "pdrtune/util.hpp"

namespace pdrtune::train {

using params::PdrConfig;

// ----------------------------------------------------------------- dataset

std::string_view outcome_name(Outcome o) {
  switch (o) {
  case Outcome::Safe: return "SAFE";
  case Outcome::Unsafe: return "UNSAFE";
  case Outcome::Timeout: return "TIMEOUT";
  }
  return "?";
}

Outcome outcome_from_name(std::string_view name) {
  if (name == "SAFE")
    return Outcome::Safe;
  if (name == "UNSAFE")
    return Outcome::Unsafe;
  if (name == "TIMEOUT")
    return Outcome::Timeout;
  throw Error("unknown outcome '" + std::string(name) + "'");
}

std::vector<RuntimeRecord> load_dataset(const std::string& path) {
  std::string text = util::read_file(path);
  auto lines = util::split(text, '\n');
  if (lines.empty() || util::trim(lines[0]) != "circuit,config_flags,seconds,outcome")
    throw Error("dataset is missing the 'circuit,config_flags,seconds,outcome' header");
  std::vector<RuntimeRecord> records;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::string_view line = util::trim(lines[k]);
    if (line.empty())
      continue;
    auto fields = util::split(line, ',');
    if (fields.size() != 4)
      throw Error("dataset row has " + std::to_string(fields.size()) + " fields, expected 4",
                  k + 1);
    RuntimeRecord r;
    r.circuit_id = std::string(util::trim(fields[0]));
    r.config = params::from_flag_string(util::trim(fields[1]));
    if (!params::is_valid(r.config))
      throw Error("invalid configuration '" + std::string(fields[1]) + "'", k + 1);
    std::string_view sec = util::trim(fields[2]);
    auto [p, ec] = std::from_chars(sec.data(), sec.data() + sec.size(), r.wall_seconds);
    if (ec != std::errc{} || p != sec.data() + sec.size())
      throw Error("malformed seconds field '" + std::string(sec) + "'", k + 1);
    if (!(r.wall_seconds > 0))
      throw Error("non-positive runtime", k + 1);
    r.outcome = outcome_from_name(util::trim(fields[3]));
    records.push_back(std::move(r));
  }
  return records;
}

std::string dataset_csv(const std::vector<RuntimeRecord>& records) {
  std::string out = "circuit,config_flags,seconds,outcome\n";
  for (const RuntimeRecord& r : records) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", r.wall_seconds);
    out += r.circuit_id + "," + params::to_flag_string(r.config) + "," + buf + "," +
           std::string(outcome_name(r.outcome)) + "\n";
  }
  return out;
}

double target_log_runtime(const RuntimeRecord& r) {
  double s = r.outcome == Outcome::Timeout ? 2.0 * r.wall_seconds : r.wall_seconds;
  return std::log1p(s);
}

// ------------------------------------------------------------------- split

SplitRecords split(const std::vector<RuntimeRecord>& records, std::uint64_t seed) {
  std::set<std::string> circuit_set;
  for (const RuntimeRecord& r : records)
    circuit_set.insert(r.circuit_id);
  std::vector<std::string> circuits(circuit_set.begin(), circuit_set.end());
  if (circuits.size() < 10)
    throw Error("split needs at least 10 distinct circuits, got " +
                std::to_string(circuits.size()));

  Rng rng(util::mix_seed(seed, 0x73706c6974ull));
  rng.shuffle(circuits);
  std::size_t n = circuits.size();
  std::size_t n_val = std::max<std::size_t>(1, n / 10);
  std::size_t n_test = std::max<std::size_t>(1, n / 10);

  std::map<std::string, int> fold;  // 0 = val, 1 = test, 2 = train
  for (std::size_t k = 0; k < n; ++k)
    fold[circuits[k]] = k < n_val ? 0 : (k < n_val + n_test ? 1 : 2);

  SplitRecords out;
  for (const RuntimeRecord& r : records) {
    switch (fold[r.circuit_id]) {
    case 0: out.val.push_back(r); break;
    case 1: out.test.push_back(r); break;
    default: out.train.push_back(r); break;
    }
  }
  return out;
}

std::vector<RuntimeRecord> filter_nontrivial(const std::vector<RuntimeRecord>& records,
                                             double threshold_seconds) {
  const PdrConfig default_config{};
  std::map<std::string, bool> keep;
  for (const RuntimeRecord& r : records)
    if (r.config == default_config)
      keep[r.circuit_id] =
          r.outcome == Outcome::Timeout || r.wall_seconds > threshold_seconds;
  std::vector<RuntimeRecord> out;
  for (const RuntimeRecord& r : records) {
    auto it = keep.find(r.circuit_id);
    if (it != keep.end() && it->second)
      out.push_back(r);
  }
  return out;
}

// ----------------------------------------------------------------- metrics

double kendall_tau(std::span<const double> truth, std::span<const double> pred) {
  std::size_t n = truth.size();
  if (n < 2 || pred.size() != n)
    throw Error("rank correlation needs two aligned vectors of length >= 2");
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dt = truth[i] - truth[j];
      double dp = pred[i] - pred[j];
      if (dt == 0 || dp == 0)
        continue;  // ties are neither concordant nor discordant
      if ((dt > 0) == (dp > 0))
        ++concordant;
      else
        ++discordant;
    }
  double denom = static_cast<double>(n) * (n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / denom;
}

namespace {

// Mid-rank assignment, 1-based.
std::vector<double> ranks_of(std::span<const double> values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k)
    order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]])
      ++j;
    double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

} // namespace

double spearman_rho(std::span<const double> truth, std::span<const double> pred) {
  std::size_t n = truth.size();
  if (n < 2 || pred.size() != n)
    throw Error("rank correlation needs two aligned vectors of length >= 2");
  std::vector<double> rt = ranks_of(truth);
  std::vector<double> rp = ranks_of(pred);
  double sum_d2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double d = rt[k] - rp[k];
    sum_d2 += d * d;
  }
  double nn = static_cast<double>(n);
  return 1.0 - 6.0 * sum_d2 / (nn * (nn * nn - 1.0));
}

// ------------------------------------------------------------- preparation

ArtifactMap build_artifacts(const std::vector<RuntimeRecord>& records,
                            const std::function<aiger::Aig(const std::string&)>& load) {
  ArtifactMap artifacts;
  for (const RuntimeRecord& r : records)
    if (!artifacts.count(r.circuit_id)) {
      aiger::Aig aig = load(r.circuit_id);
      CircuitArtifacts art;
      art.features = features::extract(aig);
      art.graph = model::compile(graphdata::build(aig, /*apply_coi=*/true));
      artifacts.emplace(r.circuit_id, std::move(art));
    }
  return artifacts;
}

features::FeatureNormalizer fit_normalizer_on(const std::vector<RuntimeRecord>& fold,
                                              const ArtifactMap& artifacts) {
  std::set<std::string> seen;
  std::vector<features::CircuitFeatures> corpus;
  for (const RuntimeRecord& r : fold)
    if (seen.insert(r.circuit_id).second)
      corpus.push_back(artifacts.at(r.circuit_id).features);
  return features::fit_normalizer(corpus);
}

PreparedData prepare(const std::vector<RuntimeRecord>& records, const ArtifactMap& artifacts,
                     const features::FeatureNormalizer& normalizer) {
  PreparedData data;
  std::map<std::string, int> index;
  for (const RuntimeRecord& r : records)
    if (!index.count(r.circuit_id)) {
      const CircuitArtifacts& art = artifacts.at(r.circuit_id);
      index[r.circuit_id] = static_cast<int>(data.ids.size());
      data.ids.push_back(r.circuit_id);
      data.circuits.push_back({&art.graph, normalizer.apply(art.features)});
    }
  for (const RuntimeRecord& r : records)
    data.samples.push_back({index[r.circuit_id], r.config, target_log_runtime(r)});
  return data;
}

// --------------------------------------------------------------- evaluation

namespace {

// Predictions for every sample, encoding each circuit once.
std::vector<double> predict_all(const model::PredictorNet& net, const PreparedData& data) {
  std::vector<std::vector<double>> embeddings(data.circuits.size());
  std::vector<char> done(data.circuits.size(), 0);
  std::vector<double> preds(data.samples.size());
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    int c = data.samples[s].circuit;
    if (!done[c]) {
      embeddings[c] = model::encode(net, *data.circuits[c].graph);
      done[c] = 1;
    }
    preds[s] = model::head_forward(net, embeddings[c], data.circuits[c].f_norm,
                                   data.samples[s].config);
  }
  return preds;
}

RankMetrics metrics_from_preds(const PreparedData& data, std::span<const double> preds) {
  std::vector<std::vector<std::size_t>> by_circuit(data.circuits.size());
  for (std::size_t s = 0; s < data.samples.size(); ++s)
    by_circuit[data.samples[s].circuit].push_back(s);

  RankMetrics m;
  int used = 0;
  for (std::size_t c = 0; c < by_circuit.size(); ++c) {
    if (by_circuit[c].size() < 2)
      continue;
    std::vector<double> truth, p;
    for (std::size_t s : by_circuit[c]) {
      truth.push_back(data.samples[s].target_log);
      p.push_back(preds[s]);
    }
    double tau = kendall_tau(truth, p);
    double rho = spearman_rho(truth, p);
    m.per_circuit.push_back({data.ids[c], {tau, rho}});
    m.kendall_tau += tau;
    m.spearman_rho += rho;
    ++used;
  }
  if (used) {
    m.kendall_tau /= used;
    m.spearman_rho /= used;
  }
  return m;
}

} // namespace

RankMetrics evaluate_metrics(const model::PredictorNet& net, const PreparedData& data) {
  std::vector<double> preds = predict_all(net, data);
  return metrics_from_preds(data, preds);
}

// ------------------------------------------------------------ training loop

TrainResult train_loop(model::PredictorNet& net, const PreparedData& train_data,
                       const PreparedData& val_data, const TrainOptions& opts) {
  if (train_data.samples.empty())
    throw Error("training fold is empty");

  // One minibatch per circuit so the ranking term always sees comparable pairs.
  std::vector<std::vector<model::Sample>> batches(train_data.circuits.size());
  for (const model::Sample& s : train_data.samples) {
    model::Sample local = s;
    local.circuit = 0;
    batches[s.circuit].push_back(local);
  }

  Rng rng(util::mix_seed(opts.seed, 0x747261696eull));
  model::AdamState adam;
  TrainResult result;
  std::vector<double> best_params(net.params().begin(), net.params().end());
  int stale = 0;

  std::vector<int> order(batches.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    order[k] = static_cast<int>(k);

  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    int batch_count = 0;
    for (int c : order) {
      if (batches[c].empty())
        continue;
      model::CircuitInput input = train_data.circuits[c];
      model::BatchResult br = model::backward(net, {&input, 1}, batches[c], opts.loss);
      if (!std::isfinite(br.loss.total))
        throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      model::adam_step(net.params(), br.grads, adam, opts.lr);
      loss_sum += br.loss.total;
      ++batch_count;
    }
    RankMetrics val = evaluate_metrics(net, val_data);
    EpochStats stats{batch_count ? loss_sum / batch_count : 0.0, val.kendall_tau,
                     val.spearman_rho};
    result.epochs.push_back(stats);

    if (result.best_epoch < 0 || stats.val_tau > result.best_val_tau + 1e-9) {
      result.best_epoch = epoch;
      result.best_val_tau = stats.val_tau;
      std::copy(net.params().begin(), net.params().end(), best_params.begin());
      stale = 0;
    } else if (++stale >= opts.patience) {
      break;
    }
  }
  std::copy(best_params.begin(), best_params.end(), net.params().begin());
  return result;
}

// --------------------------------------------------- permutation importance

std::vector<std::pair<std::string, double>>
permutation_importance(const model::PredictorNet& net, const PreparedData& test_data,
                       std::uint64_t seed, int repeats) {
  double baseline = evaluate_metrics(net, test_data).kendall_tau;
  Rng rng(util::mix_seed(seed, 0x696d706f72ull));

  std::vector<std::pair<std::string, double>> out;
  const std::size_t nc = test_data.circuits.size();
  for (std::size_t dim = 0; dim < 11; ++dim) {
    double degradation = 0;
    for (int rep = 0; rep < repeats; ++rep) {
      std::vector<int> perm(nc);
      for (std::size_t k = 0; k < nc; ++k)
        perm[k] = static_cast<int>(k);
      rng.shuffle(perm);
      PreparedData shuffled = test_data;
      for (std::size_t c = 0; c < nc; ++c)
        shuffled.circuits[c].f_norm[dim] = test_data.circuits[perm[c]].f_norm[dim];
      degradation += baseline - evaluate_metrics(net, shuffled).kendall_tau;
    }
    out.push_back({features::feature_names()[dim], degradation / repeats});
  }
  return out;
}

} // namespace pdrtune::train
