#include "pdrtune/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "pdrtune/util.hpp"

namespace pdrtune::model {

using params::PdrConfig;

// ------------------------------------------------------------------ layout

PredictorNet::PredictorNet(NetConfig cfg) : cfg_(std::move(cfg)) {
  std::size_t off = 0;
  std::size_t d_in = cfg_.node_dim;
  for (unsigned l = 0; l < cfg_.sage_depth; ++l) {
    SageShape s;
    s.d_in = d_in;
    s.d_out = cfg_.sage_width;
    s.w_self = off;
    off += s.d_in * s.d_out;
    s.w_neigh = off;
    off += s.d_in * s.d_out;
    s.bias = off;
    off += s.d_out;
    sage_.push_back(s);
    d_in = s.d_out;
  }
  d_in = cfg_.sage_width + cfg_.feat_dim + cfg_.config_dim;
  std::vector<std::size_t> widths(cfg_.head_hidden.begin(), cfg_.head_hidden.end());
  widths.push_back(1);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    DenseShape s;
    s.d_in = d_in;
    s.d_out = widths[l];
    s.relu = l + 1 < widths.size();
    s.w = off;
    off += s.d_in * s.d_out;
    s.b = off;
    off += s.d_out;
    head_.push_back(s);
    d_in = s.d_out;
  }
  params_.assign(off, 0.0);
}

void PredictorNet::init_params(std::uint64_t seed) {
  Rng rng(util::mix_seed(seed, 0x6e65740ull));
  auto glorot = [&](std::size_t off, std::size_t fan_in, std::size_t fan_out) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t k = 0; k < fan_in * fan_out; ++k)
      params_[off + k] = rng.uniform(-bound, bound);
  };
  for (const SageShape& s : sage_) {
    glorot(s.w_self, s.d_in, s.d_out);
    glorot(s.w_neigh, s.d_in, s.d_out);
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(s.bias), s.d_out, 0.0);
  }
  for (const DenseShape& s : head_) {
    glorot(s.w, s.d_in, s.d_out);
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(s.b), s.d_out, 0.0);
  }
}

// ----------------------------------------------------------------- compile

CompiledGraph compile(const graphdata::GraphData& g) {
  CompiledGraph cg;
  cg.num_nodes = g.num_nodes;
  cg.x0 = g.node_features;
  std::vector<int> degree(g.num_nodes, 0);
  for (auto [src, dst] : g.edges)
    ++degree[dst];
  cg.in_offset.assign(g.num_nodes + 1, 0);
  for (int n = 0; n < g.num_nodes; ++n)
    cg.in_offset[n + 1] = cg.in_offset[n] + degree[n];
  cg.in_src.assign(g.edges.size(), 0);
  std::vector<int> cursor(cg.in_offset.begin(), cg.in_offset.end() - 1);
  for (auto [src, dst] : g.edges)
    cg.in_src[cursor[dst]++] = src;
  return cg;
}

// ----------------------------------------------------------------- forward

namespace {

// y += W x with W stored row-major (d_out x d_in)
void matvec_acc(std::span<const double> w, const double* x, double* y, std::size_t d_in,
                std::size_t d_out) {
  for (std::size_t r = 0; r < d_out; ++r) {
    const double* row = w.data() + r * d_in;
    double acc = 0;
    for (std::size_t c = 0; c < d_in; ++c)
      acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += W^T d
void matvec_t_acc(std::span<const double> w, const double* d, double* y, std::size_t d_in,
                  std::size_t d_out) {
  for (std::size_t r = 0; r < d_out; ++r) {
    const double* row = w.data() + r * d_in;
    double dr = d[r];
    if (dr == 0)
      continue;
    for (std::size_t c = 0; c < d_in; ++c)
      y[c] += row[c] * dr;
  }
}

} // namespace

std::vector<double> sage_forward(const PredictorNet& net, std::size_t layer,
                                 const CompiledGraph& g, const std::vector<double>& x,
                                 std::vector<double>* neigh_mean, std::vector<double>* pre_act) {
  const auto& s = net.sage_shape(layer);
  const std::size_t n = static_cast<std::size_t>(g.num_nodes);
  if (x.size() != n * s.d_in)
    throw Error("sage_forward: node matrix has wrong shape");
  auto p = net.params();
  auto w_self = p.subspan(s.w_self, s.d_in * s.d_out);
  auto w_neigh = p.subspan(s.w_neigh, s.d_in * s.d_out);
  auto bias = p.subspan(s.bias, s.d_out);

  std::vector<double> mean(n * s.d_in, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    int lo = g.in_offset[i], hi = g.in_offset[i + 1];
    if (lo == hi)
      continue;
    double* mi = mean.data() + i * s.d_in;
    for (int e = lo; e < hi; ++e) {
      const double* xj = x.data() + static_cast<std::size_t>(g.in_src[e]) * s.d_in;
      for (std::size_t c = 0; c < s.d_in; ++c)
        mi[c] += xj[c];
    }
    double inv = 1.0 / (hi - lo);
    for (std::size_t c = 0; c < s.d_in; ++c)
      mi[c] *= inv;
  }

  std::vector<double> z(n * s.d_out);
  for (std::size_t i = 0; i < n; ++i) {
    double* zi = z.data() + i * s.d_out;
    for (std::size_t r = 0; r < s.d_out; ++r)
      zi[r] = bias[r];
    matvec_acc(w_self, x.data() + i * s.d_in, zi, s.d_in, s.d_out);
    matvec_acc(w_neigh, mean.data() + i * s.d_in, zi, s.d_in, s.d_out);
  }
  std::vector<double> out(n * s.d_out);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = z[k] > 0 ? z[k] : 0.0;

  if (neigh_mean)
    *neigh_mean = std::move(mean);
  if (pre_act)
    *pre_act = std::move(z);
  return out;
}

std::vector<double> encode(const PredictorNet& net, const CompiledGraph& g, EncodeCache* cache) {
  if (g.num_nodes == 0)
    throw Error("cannot encode a zero-node graph");
  std::vector<double> x = g.x0;
  if (cache) {
    cache->x.clear();
    cache->m.clear();
    cache->z.clear();
    cache->x.push_back(x);
  }
  for (std::size_t l = 0; l < net.num_sage_layers(); ++l) {
    std::vector<double> mean, z;
    x = sage_forward(net, l, g, x, cache ? &mean : nullptr, cache ? &z : nullptr);
    if (cache) {
      cache->m.push_back(std::move(mean));
      cache->z.push_back(std::move(z));
      cache->x.push_back(x);
    }
  }
  const std::size_t n = static_cast<std::size_t>(g.num_nodes);
  const std::size_t w = net.sage_shape(net.num_sage_layers() - 1).d_out;
  std::vector<double> h(w, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < w; ++c)
      h[c] += x[i * w + c];
  for (double& v : h)
    v /= static_cast<double>(n);
  return h;
}

double head_forward(const PredictorNet& net, std::span<const double> h,
                    std::span<const double> f_norm, const PdrConfig& config, HeadCache* cache) {
  const NetConfig& cfg = net.config();
  if (h.size() != cfg.sage_width || f_norm.size() != cfg.feat_dim)
    throw Error("head_forward: input dimension mismatch");
  std::vector<double> in;
  in.reserve(net.head_input_dim());
  in.insert(in.end(), h.begin(), h.end());
  in.insert(in.end(), f_norm.begin(), f_norm.end());
  for (bool b : config.bits())
    in.push_back(b ? 1.0 : 0.0);

  if (cache) {
    cache->in.clear();
    cache->z.clear();
  }
  auto p = net.params();
  for (std::size_t l = 0; l < net.num_head_layers(); ++l) {
    const auto& s = net.head_shape(l);
    std::vector<double> z(s.d_out);
    auto bias = p.subspan(s.b, s.d_out);
    for (std::size_t r = 0; r < s.d_out; ++r)
      z[r] = bias[r];
    matvec_acc(p.subspan(s.w, s.d_in * s.d_out), in.data(), z.data(), s.d_in, s.d_out);
    if (cache) {
      cache->in.push_back(std::move(in));
      cache->z.push_back(z);
      in.clear();
    }
    std::vector<double> out(s.d_out);
    for (std::size_t r = 0; r < s.d_out; ++r)
      out[r] = s.relu && z[r] < 0 ? 0.0 : z[r];
    in = std::move(out);
  }
  return in[0];
}

double predict_log_runtime(const PredictorNet& net, const graphdata::GraphData& g,
                           const std::array<double, 11>& f_norm, const PdrConfig& config) {
  if (!params::is_valid(config))
    throw Error("cannot predict for an invalid configuration");
  CompiledGraph cg = compile(g);
  std::vector<double> h = encode(net, cg);
  return head_forward(net, h, f_norm, config);
}

// -------------------------------------------------------------------- loss

LossResult hybrid_loss(std::span<const int> circuit_ids, std::span<const double> preds,
                       std::span<const double> targets, const LossConfig& cfg) {
  const std::size_t n = preds.size();
  if (n == 0 || circuit_ids.size() != n || targets.size() != n)
    throw Error("hybrid_loss: empty or misaligned batch");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(preds[i]) || !std::isfinite(targets[i]))
      throw Error("hybrid_loss: non-finite prediction or target");

  LossResult res;
  res.grad_pred.assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    double d = preds[i] - targets[i];
    res.mse += d * d;
  }
  res.mse /= static_cast<double>(n);

  // Same-circuit pairs with strictly smaller true runtime first.
  std::vector<std::pair<std::size_t, std::size_t>> active;
  std::size_t num_pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || circuit_ids[i] != circuit_ids[j] || !(targets[i] < targets[j]))
        continue;
      ++num_pairs;
      double slack = cfg.margin - (preds[j] - preds[i]);
      if (slack > 0) {
        res.ranking += slack;
        active.emplace_back(i, j);
      }
    }
  if (num_pairs > 0)
    res.ranking /= static_cast<double>(num_pairs);
  res.total = cfg.alpha * res.mse + (1.0 - cfg.alpha) * res.ranking;

  for (std::size_t i = 0; i < n; ++i)
    res.grad_pred[i] = cfg.alpha * 2.0 * (preds[i] - targets[i]) / static_cast<double>(n);
  if (num_pairs > 0) {
    double w = (1.0 - cfg.alpha) / static_cast<double>(num_pairs);
    for (auto [i, j] : active) {
      res.grad_pred[i] += w;
      res.grad_pred[j] -= w;
    }
  }
  return res;
}

// ---------------------------------------------------------------- backward

BatchResult backward(const PredictorNet& net, std::span<const CircuitInput> circuits,
                     std::span<const Sample> samples, const LossConfig& cfg) {
  const std::size_t nc = circuits.size();
  std::vector<EncodeCache> enc_caches(nc);
  std::vector<std::vector<double>> embeddings(nc);
  for (std::size_t c = 0; c < nc; ++c)
    embeddings[c] = encode(net, *circuits[c].graph, &enc_caches[c]);

  BatchResult out;
  out.preds.resize(samples.size());
  std::vector<int> circuit_ids(samples.size());
  std::vector<double> targets(samples.size());
  std::vector<HeadCache> head_caches(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Sample& smp = samples[s];
    circuit_ids[s] = smp.circuit;
    targets[s] = smp.target_log;
    out.preds[s] = head_forward(net, embeddings[smp.circuit], circuits[smp.circuit].f_norm,
                                smp.config, &head_caches[s]);
  }
  out.loss = hybrid_loss(circuit_ids, out.preds, targets, cfg);

  out.grads.assign(net.num_params(), 0.0);
  auto p = net.params();
  const std::size_t emb_dim = net.config().sage_width;
  std::vector<std::vector<double>> d_emb(nc, std::vector<double>(emb_dim, 0.0));

  // Head backward per sample.
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const HeadCache& hc = head_caches[s];
    std::vector<double> delta = {out.loss.grad_pred[s]};
    for (std::size_t l = net.num_head_layers(); l-- > 0;) {
      const auto& shape = net.head_shape(l);
      if (shape.relu)
        for (std::size_t r = 0; r < shape.d_out; ++r)
          if (hc.z[l][r] <= 0)
            delta[r] = 0;
      const std::vector<double>& in = hc.in[l];
      for (std::size_t r = 0; r < shape.d_out; ++r) {
        double dr = delta[r];
        if (dr == 0)
          continue;
        double* wrow = out.grads.data() + shape.w + r * shape.d_in;
        for (std::size_t c = 0; c < shape.d_in; ++c)
          wrow[c] += dr * in[c];
        out.grads[shape.b + r] += dr;
      }
      std::vector<double> d_in(shape.d_in, 0.0);
      matvec_t_acc(p.subspan(shape.w, shape.d_in * shape.d_out), delta.data(), d_in.data(),
                   shape.d_in, shape.d_out);
      delta = std::move(d_in);
    }
    // The head input is concat(h, f, bits); only h backpropagates further.
    std::vector<double>& acc = d_emb[samples[s].circuit];
    for (std::size_t c = 0; c < emb_dim; ++c)
      acc[c] += delta[c];
  }

  // Graph backward per circuit: mean pool, then SAGE layers in reverse.
  for (std::size_t c = 0; c < nc; ++c) {
    const CompiledGraph& g = *circuits[c].graph;
    const EncodeCache& ec = enc_caches[c];
    const std::size_t n = static_cast<std::size_t>(g.num_nodes);
    std::vector<double> d_nodes(n * emb_dim);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < emb_dim; ++k)
        d_nodes[i * emb_dim + k] = d_emb[c][k] / static_cast<double>(n);

    for (std::size_t l = net.num_sage_layers(); l-- > 0;) {
      const auto& s = net.sage_shape(l);
      const std::vector<double>& x_prev = ec.x[l];
      const std::vector<double>& mean = ec.m[l];
      const std::vector<double>& z = ec.z[l];
      std::vector<double> d_prev(n * s.d_in, 0.0);
      std::vector<double> d_mean_i(s.d_in);
      for (std::size_t i = 0; i < n; ++i) {
        double* dz = d_nodes.data() + i * s.d_out;
        const double* zi = z.data() + i * s.d_out;
        for (std::size_t r = 0; r < s.d_out; ++r)
          if (zi[r] <= 0)
            dz[r] = 0;
        const double* xi = x_prev.data() + i * s.d_in;
        const double* mi = mean.data() + i * s.d_in;
        for (std::size_t r = 0; r < s.d_out; ++r) {
          double dr = dz[r];
          if (dr == 0)
            continue;
          double* ws = out.grads.data() + s.w_self + r * s.d_in;
          double* wn = out.grads.data() + s.w_neigh + r * s.d_in;
          for (std::size_t k = 0; k < s.d_in; ++k) {
            ws[k] += dr * xi[k];
            wn[k] += dr * mi[k];
          }
          out.grads[s.bias + r] += dr;
        }
        matvec_t_acc(p.subspan(s.w_self, s.d_in * s.d_out), dz,
                     d_prev.data() + i * s.d_in, s.d_in, s.d_out);
        int lo = g.in_offset[i], hi = g.in_offset[i + 1];
        if (lo == hi)
          continue;
        std::fill(d_mean_i.begin(), d_mean_i.end(), 0.0);
        matvec_t_acc(p.subspan(s.w_neigh, s.d_in * s.d_out), dz, d_mean_i.data(), s.d_in,
                     s.d_out);
        double inv = 1.0 / (hi - lo);
        for (int e = lo; e < hi; ++e) {
          double* dj = d_prev.data() + static_cast<std::size_t>(g.in_src[e]) * s.d_in;
          for (std::size_t k = 0; k < s.d_in; ++k)
            dj[k] += d_mean_i[k] * inv;
        }
      }
      d_nodes = std::move(d_prev);
    }
  }
  return out;
}

// -------------------------------------------------------------------- adam

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error("adam_step: size mismatch");
  state.t += 1;
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grads[k];
    state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grads[k] * grads[k];
    double mhat = state.m[k] / c1;
    double vhat = state.v[k] / c2;
    params[k] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

// -------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'P', 'T', 'N', 'E', 'T', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k)
    out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k)
    out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
  std::string_view data;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (pos + n > data.size())
      throw Error("truncated checkpoint file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

} // namespace

void save_checkpoint(const std::string& path, const PredictorNet& net,
                     const features::FeatureNormalizer& normalizer) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  const NetConfig& cfg = net.config();
  put_u32(out, cfg.node_dim);
  put_u32(out, cfg.sage_width);
  put_u32(out, cfg.sage_depth);
  put_u32(out, cfg.feat_dim);
  put_u32(out, cfg.config_dim);
  put_u32(out, static_cast<std::uint32_t>(cfg.head_hidden.size()));
  for (unsigned w : cfg.head_hidden)
    put_u32(out, w);
  put_u64(out, net.num_params());
  for (double v : net.params())
    put_f64(out, v);
  put_u32(out, 11);
  for (double v : normalizer.shift)
    put_f64(out, v);
  for (double v : normalizer.scale)
    put_f64(out, v);
  util::write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string data = util::read_file(path);
  Reader r{data};
  r.need(sizeof(kMagic));
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error("not a checkpoint file: " + path);
  r.pos = sizeof(kMagic);
  if (r.u32() != kVersion)
    throw Error("unsupported checkpoint version in " + path);
  NetConfig cfg;
  cfg.node_dim = r.u32();
  cfg.sage_width = r.u32();
  cfg.sage_depth = r.u32();
  cfg.feat_dim = r.u32();
  cfg.config_dim = r.u32();
  cfg.head_hidden.resize(r.u32());
  for (unsigned& w : cfg.head_hidden)
    w = r.u32();
  Checkpoint ck{PredictorNet(cfg), {}};
  std::uint64_t count = r.u64();
  if (count != ck.net.num_params())
    throw Error("checkpoint parameter count does not match its layer dimensions");
  for (double& v : ck.net.params())
    v = r.f64();
  if (r.u32() != 11)
    throw Error("checkpoint normalizer must have 11 dimensions");
  for (double& v : ck.normalizer.shift)
    v = r.f64();
  for (double& v : ck.normalizer.scale)
    v = r.f64();
  return ck;
}

} // namespace pdrtune::model
