#include "sympkan/models/model.hpp"

#include <cstring>
#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "sympkan/errors.hpp"

namespace sympkan::models {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'K', 'H', 'M', 'F'};
constexpr std::uint32_t kFormatVersion = 1;

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xffu);
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xffu);
}

void append_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  append_u64(out, bits);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size())
      throw FormatError("model file truncated at byte " + std::to_string(pos_) +
                        " while reading " + what);
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64(const char* what) {
    std::uint64_t bits = u64(what);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }

  std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

json architecture_header(const Model& m) {
  json h;
  h["kind"] = kind_name(model_kind(m));
  if (const auto* b = std::get_if<BaselineNet>(&m)) {
    h["widths"] = b->net.widths();
  } else if (const auto* p = std::get_if<MlpHamiltonian>(&m)) {
    h["widths"] = p->net.widths();
  } else {
    const KarOptions& o = std::get<KarHamiltonian>(m).options();
    h["widths"] = o.widths;
    h["grid_intervals"] = o.grid_intervals;
    h["degree"] = o.degree;
    h["input_domains"] = o.input_domains;
    h["hidden_halfwidth"] = o.hidden_halfwidth;
  }
  return h;
}

Model model_from_header(const json& h) {
  std::string kind;
  std::vector<int> widths;
  try {
    kind = h.at("kind").get<std::string>();
    widths = h.at("widths").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model header missing fields: ") + e.what());
  }
  ModelKind mk;
  try {
    mk = kind_from_name(kind);
  } catch (const ModelKindError& e) {
    throw FormatError(e.what());
  }
  switch (mk) {
    case ModelKind::kBaseline:
      return BaselineNet(std::move(widths), 0);
    case ModelKind::kMlpHnn:
      return MlpHamiltonian(std::move(widths), 0);
    case ModelKind::kKarHnn: {
      KarOptions o;
      o.widths = std::move(widths);
      try {
        o.grid_intervals = h.at("grid_intervals").get<int>();
        o.degree = h.at("degree").get<int>();
        o.input_domains = h.at("input_domains").get<std::vector<double>>();
        o.hidden_halfwidth = h.at("hidden_halfwidth").get<double>();
      } catch (const json::exception& e) {
        throw FormatError(std::string("model header missing fields: ") +
                          e.what());
      }
      return KarHamiltonian(std::move(o), 0);
    }
  }
  throw FormatError("unknown model kind '" + kind + "'");
}

}  // namespace

BaselineNet::BaselineNet(std::vector<int> widths, std::uint64_t seed)
    : net(std::move(widths), seed) {
  if (net.input_dim() != net.output_dim())
    throw UsageError("baseline field network must map a state to itself");
  if (net.input_dim() % 2 != 0)
    throw UsageError("state dimension must be even");
}

MlpHamiltonian::MlpHamiltonian(std::vector<int> widths, std::uint64_t seed)
    : net(std::move(widths), seed) {
  if (net.output_dim() != 1)
    throw UsageError("Hamiltonian network output must be scalar");
  if (net.input_dim() % 2 != 0)
    throw UsageError("state dimension must be even");
}

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBaseline: return "baseline";
    case ModelKind::kMlpHnn: return "mlp_hnn";
    case ModelKind::kKarHnn: return "kar_hnn";
  }
  throw UsageError("bad model kind");
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "baseline") return ModelKind::kBaseline;
  if (name == "mlp_hnn") return ModelKind::kMlpHnn;
  if (name == "kar_hnn") return ModelKind::kKarHnn;
  throw ModelKindError("unknown model kind '" + name +
                       "' (expected baseline, mlp_hnn, or kar_hnn)");
}

ModelKind model_kind(const Model& m) {
  return static_cast<ModelKind>(m.index());
}

ad::ParameterStore& model_params(Model& m) {
  return std::visit([](auto& v) -> ad::ParameterStore& {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, KarHamiltonian>)
      return v.params();
    else
      return v.net.params();
  }, m);
}

const ad::ParameterStore& model_params(const Model& m) {
  return model_params(const_cast<Model&>(m));
}

int model_input_dim(const Model& m) {
  return std::visit([](const auto& v) {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, KarHamiltonian>)
      return v.input_dim();
    else
      return v.net.input_dim();
  }, m);
}

ad::Var eval_hamiltonian(const Model& m, ad::Tape& tape,
                         std::span<const ad::Var> z) {
  if (const auto* p = std::get_if<MlpHamiltonian>(&m))
    return p->net.forward(tape, z).front();
  if (const auto* k = std::get_if<KarHamiltonian>(&m)) return k->eval(tape, z);
  throw ModelKindError("baseline field networks have no Hamiltonian");
}

std::vector<ad::Var> symplectic_vector_field(const Model& m, ad::Tape& tape,
                                             std::span<const ad::Var> z) {
  std::vector<ad::Var> grad;
  if (const auto* p = std::get_if<MlpHamiltonian>(&m))
    grad = p->net.input_gradient(tape, z);
  else if (const auto* k = std::get_if<KarHamiltonian>(&m))
    grad = k->input_gradient(tape, z);
  else
    throw ModelKindError("baseline field networks have no Hamiltonian");

  const std::size_t d = grad.size() / 2;
  std::vector<ad::Var> field(grad.size());
  for (std::size_t i = 0; i < d; ++i) {
    field[i] = grad[d + i];             // dq/dt =  dH/dp
    field[d + i] = ad::neg(grad[i]);    // dp/dt = -dH/dq
  }
  return field;
}

std::vector<ad::Var> model_vector_field(const Model& m, ad::Tape& tape,
                                        std::span<const ad::Var> z) {
  if (const auto* b = std::get_if<BaselineNet>(&m))
    return b->net.forward(tape, z);
  return symplectic_vector_field(m, tape, z);
}

double hamiltonian_value(const Model& m, ad::Tape& scratch,
                         std::span<const double> z) {
  scratch.reset();
  std::vector<ad::Var> in(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) in[i] = scratch.input(z[i]);
  return scratch.value(eval_hamiltonian(m, scratch, in));
}

void field_values(const Model& m, ad::Tape& scratch, std::span<const double> z,
                  std::span<double> out) {
  if (out.size() != z.size())
    throw ShapeError("field output span must match the state dimension");
  scratch.reset();
  std::vector<ad::Var> in(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) in[i] = scratch.input(z[i]);
  auto f = model_vector_field(m, scratch, in);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scratch.value(f[i]);
}

std::vector<std::uint8_t> serialize(const Model& m) {
  const std::string header = architecture_header(m).dump();
  const ad::ParameterStore& store = model_params(m);

  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 + 8 + header.size() + 8 + 8 * store.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  append_u32(out, kFormatVersion);
  append_u64(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  append_u64(out, store.size());
  for (std::size_t i = 0; i < store.size(); ++i) append_f64(out, store[i]);
  return out;
}

Model deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.raw(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw FormatError("not a model file: bad magic at byte 0");
  const std::uint32_t version = r.u32("format version");
  if (version != kFormatVersion)
    throw FormatError("model format version mismatch: expected " +
                      std::to_string(kFormatVersion) + ", found " +
                      std::to_string(version));
  const std::uint64_t header_len = r.u64("header length");
  auto header_bytes = r.raw(header_len, "architecture header");

  json h;
  try {
    h = json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(std::string("model header is not valid JSON: ") +
                      e.what());
  }
  Model m = model_from_header(h);

  const std::uint64_t count = r.u64("parameter count");
  ad::ParameterStore& store = model_params(m);
  if (count != store.size())
    throw FormatError("parameter count mismatch: architecture has " +
                      std::to_string(store.size()) + ", file stores " +
                      std::to_string(count) + " (at byte " +
                      std::to_string(r.offset()) + ")");
  for (std::size_t i = 0; i < count; ++i) store[i] = r.f64("parameters");
  if (r.offset() != bytes.size())
    throw FormatError("model file has " +
                      std::to_string(bytes.size() - r.offset()) +
                      " trailing bytes at byte " + std::to_string(r.offset()));
  return m;
}

void save_model(const Model& m, const std::filesystem::path& path) {
  auto bytes = serialize(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const auto size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError("failed reading '" + path.string() + "'");
  return deserialize(bytes);
}

}  // namespace sympkan::models
