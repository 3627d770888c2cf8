#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include "evtax/encoder.hpp"

namespace evtax {

void EncoderConfig::validate() const {
  if (num_layers < 1 || model_dim < 1 || num_heads < 1 || ffn_dim < 1 || max_len < 1 ||
      vocab_size < 1)
    throw Error("encoder config: every dimension must be at least 1");
  if (model_dim % num_heads != 0)
    throw Error("encoder config: model_dim must be divisible by num_heads");
  if (!(layer_norm_eps > 0.0)) throw Error("encoder config: layer_norm_eps must be positive");
}

namespace {

class UniformSource {
 public:
  UniformSource(std::uint64_t seed, double stddev)
      : rng_(seed), half_width_(std::sqrt(3.0) * stddev) {}

  // 53 random bits mapped onto [-a, a); independent of the standard library's
  // distribution implementations.
  double next() {
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * half_width_;
  }

  RowMatrix<double> matrix(std::size_t rows, std::size_t cols) {
    RowMatrix<double> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = next();
    return m;
  }

 private:
  std::mt19937_64 rng_;
  double half_width_;
};

}  // namespace

EncoderWeights<double> init_weights(const EncoderConfig& config) {
  config.validate();
  UniformSource src(config.seed, 1.0 / std::sqrt(static_cast<double>(config.model_dim)));
  const auto d = config.model_dim;
  const auto dk = config.head_dim();
  EncoderWeights<double> w;
  w.config = config;
  w.token_embedding = src.matrix(config.vocab_size, d);
  w.position_embedding = src.matrix(config.max_len, d);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerWeights<double> layer;
    for (std::size_t h = 0; h < config.num_heads; ++h)
      layer.heads.push_back({src.matrix(d, dk), src.matrix(d, dk), src.matrix(d, dk)});
    layer.output = src.matrix(config.num_heads * dk, d);
    layer.ffn_in = src.matrix(d, config.ffn_dim);
    layer.ffn_in_bias = ColVector<double>::Zero(static_cast<Eigen::Index>(config.ffn_dim));
    layer.ffn_out = src.matrix(config.ffn_dim, d);
    const auto dd = static_cast<Eigen::Index>(d);
    layer.ffn_out_bias = ColVector<double>::Zero(dd);
    layer.attn_norm_gain = ColVector<double>::Ones(dd);
    layer.attn_norm_bias = ColVector<double>::Zero(dd);
    layer.ffn_norm_gain = ColVector<double>::Ones(dd);
    layer.ffn_norm_bias = ColVector<double>::Zero(dd);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

namespace {

template <typename M>
void check_shape(const M& m, std::size_t rows, std::size_t cols, const char* what) {
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols)
    throw Error(std::string("encoder weights: bad shape for ") + what);
  if (!m.allFinite()) throw Error(std::string("encoder weights: non-finite entry in ") + what);
}

// Visits every tensor in file order.
template <typename W, typename F>
void for_each_tensor(W& w, F&& f) {
  const auto& c = w.config;
  const auto d = c.model_dim, dk = c.head_dim();
  f(w.token_embedding, c.vocab_size, d, "token_embedding");
  f(w.position_embedding, c.max_len, d, "position_embedding");
  for (auto& layer : w.layers) {
    for (auto& head : layer.heads) {
      f(head.query, d, dk, "query");
      f(head.key, d, dk, "key");
      f(head.value, d, dk, "value");
    }
    f(layer.output, c.num_heads * dk, d, "output");
    f(layer.ffn_in, d, c.ffn_dim, "ffn_in");
    f(layer.ffn_in_bias, c.ffn_dim, 1, "ffn_in_bias");
    f(layer.ffn_out, c.ffn_dim, d, "ffn_out");
    f(layer.ffn_out_bias, d, 1, "ffn_out_bias");
    f(layer.attn_norm_gain, d, 1, "attn_norm_gain");
    f(layer.attn_norm_bias, d, 1, "attn_norm_bias");
    f(layer.ffn_norm_gain, d, 1, "ffn_norm_gain");
    f(layer.ffn_norm_bias, d, 1, "ffn_norm_bias");
  }
}

constexpr char kMagic[8] = {'E', 'V', 'T', 'X', 'E', 'N', 'C', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; add byte swapping for this target");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error("encoder weights: truncated file");
  return v;
}

}  // namespace

void validate_weights(const EncoderWeights<double>& weights) {
  weights.config.validate();
  if (weights.layers.size() != weights.config.num_layers)
    throw Error("encoder weights: layer count differs from config");
  for (const auto& layer : weights.layers)
    if (layer.heads.size() != weights.config.num_heads)
      throw Error("encoder weights: head count differs from config");
  for_each_tensor(weights, [](const auto& m, std::size_t r, std::size_t c, const char* what) {
    check_shape(m, r, c, what);
  });
}

void save_weights(const EncoderWeights<double>& weights, const std::filesystem::path& path) {
  validate_weights(weights);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  const auto& c = weights.config;
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, sizeof(double));
  for (std::uint64_t v : {std::uint64_t{c.num_layers}, std::uint64_t{c.model_dim},
                          std::uint64_t{c.num_heads}, std::uint64_t{c.ffn_dim},
                          std::uint64_t{c.max_len}, std::uint64_t{c.vocab_size}, c.seed})
    put(out, v);
  put(out, c.layer_norm_eps);
  for_each_tensor(weights, [&](const auto& m, std::size_t, std::size_t, const char*) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
  if (!out) throw Error("write failed: " + path.string());
}

EncoderWeights<double> load_weights(const std::filesystem::path& path,
                                    const EncoderConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read encoder weights " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error("encoder weights: bad magic in " + path.string());
  if (get<std::uint32_t>(in) != kVersion) throw Error("encoder weights: unsupported version");
  if (get<std::uint32_t>(in) != sizeof(double)) throw Error("encoder weights: scalar size");
  EncoderWeights<double> w;
  auto& c = w.config;
  c.num_layers = get<std::uint64_t>(in);
  c.model_dim = get<std::uint64_t>(in);
  c.num_heads = get<std::uint64_t>(in);
  c.ffn_dim = get<std::uint64_t>(in);
  c.max_len = get<std::uint64_t>(in);
  c.vocab_size = get<std::uint64_t>(in);
  c.seed = get<std::uint64_t>(in);
  c.layer_norm_eps = get<double>(in);
  c.validate();
  if (expected && !(*expected == c))
    throw Error("encoder weights: config in " + path.string() + " does not match the expected config");
  w.layers.resize(c.num_layers);
  for (auto& layer : w.layers) layer.heads.resize(c.num_heads);
  for_each_tensor(w, [&](auto& m, std::size_t rows, std::size_t cols, const char* what) {
    auto r = get<std::uint64_t>(in), k = get<std::uint64_t>(in);
    if (r != rows || k != cols)
      throw Error(std::string("encoder weights: shape mismatch for ") + what);
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw Error("encoder weights: truncated file");
  });
  if (in.peek() != std::char_traits<char>::eof())
    throw Error("encoder weights: trailing bytes in " + path.string());
  validate_weights(w);
  return w;
}

}  // namespace evtax
