#include "qumera/manifest.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace qumera::manifest {

using nlohmann::json;

const mera::FiniteMera& Manifest::finite() const {
  require(is_finite(), ErrorCode::InvalidArgument, "manifest holds a scale-invariant network");
  return std::get<0>(network);
}

const mera::ScaleInvariantMera& Manifest::scale_invariant() const {
  require(!is_finite(), ErrorCode::InvalidArgument, "manifest holds a finite network");
  return std::get<1>(network);
}

std::size_t Manifest::bond_dim() const {
  return is_finite() ? finite().bond_dim() : scale_invariant().bond_dim();
}

namespace {

json tensor_json(const std::string& role, int level, std::uint64_t position, const DenseTensor& t) {
  json entries = json::array();
  for (const cdouble& z : t.entries()) entries.push_back(json::array({z.real(), z.imag()}));
  return json{{"role", role}, {"level", level}, {"position", position}, {"shape", t.shape()}, {"entries", entries}};
}

json header(const std::string& kind, std::size_t D) {
  return json{{"format_version", kFormatVersion}, {"kind", kind}, {"D", D}, {"tensors", json::array()}};
}

[[noreturn]] void parse_error(const std::string& what) { fail(ErrorCode::Parse, "manifest: " + what); }

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) parse_error(where + " lacks \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    parse_error(where + " has a malformed \"" + key + "\"");
  }
}

struct Entry {
  std::string role;
  int level;
  std::uint64_t position;
  DenseTensor tensor;
};

Entry parse_tensor(const json& j, std::size_t index) {
  const std::string where = "tensor " + std::to_string(index);
  Entry e;
  e.role = field<std::string>(j, "role", where);
  if (e.role != "chi" && e.role != "lam" && e.role != "top") parse_error(where + " has unknown role \"" + e.role + "\"");
  e.level = field<int>(j, "level", where);
  e.position = field<std::uint64_t>(j, "position", where);
  const Shape shape = field<Shape>(j, "shape", where);
  const json& entries = j.contains("entries") ? j.at("entries") : json();
  if (!entries.is_array()) parse_error(where + " lacks an \"entries\" list");
  if (entries.size() != shape_volume(shape))
    parse_error(where + " has " + std::to_string(entries.size()) + " entries for shape volume " +
                std::to_string(shape_volume(shape)));
  std::vector<cdouble> values;
  values.reserve(entries.size());
  for (const json& z : entries) {
    if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
      parse_error(where + " has an entry that is not a [re, im] pair");
    values.emplace_back(z[0].get<double>(), z[1].get<double>());
  }
  e.tensor = DenseTensor(shape, std::move(values));
  return e;
}

void check_shape(const Entry& e, std::size_t D) {
  const std::size_t rank = e.role == "chi" ? 4 : e.role == "lam" ? 3 : 4;
  if (e.tensor.shape() != Shape(rank, D))
    parse_error(e.role + " tensor at level " + std::to_string(e.level) + " position " + std::to_string(e.position) +
                " must have " + std::to_string(rank) + " legs of dimension " + std::to_string(D));
}

}  // namespace

Manifest parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_error(std::string("invalid JSON: ") + e.what());
  }
  const int version = field<int>(doc, "format_version", "document");
  if (version != kFormatVersion) parse_error("unsupported format_version " + std::to_string(version));
  const std::string kind = field<std::string>(doc, "kind", "document");
  const std::size_t D = field<std::size_t>(doc, "D", "document");
  if (D < 2) parse_error("D must be at least 2");
  if (!doc.contains("tensors") || !doc.at("tensors").is_array()) parse_error("document lacks a \"tensors\" list");

  std::map<std::tuple<std::string, int, std::uint64_t>, DenseTensor> tensors;
  std::size_t index = 0;
  for (const json& t : doc.at("tensors")) {
    Entry e = parse_tensor(t, index++);
    check_shape(e, D);
    auto key = std::make_tuple(e.role, e.level, e.position);
    if (tensors.count(key))
      parse_error("duplicate " + e.role + " tensor at level " + std::to_string(e.level) + " position " +
                  std::to_string(e.position));
    tensors.emplace(key, std::move(e.tensor));
  }
  auto take = [&](const std::string& role, int level, std::uint64_t pos) {
    auto it = tensors.find({role, level, pos});
    if (it == tensors.end())
      parse_error("missing " + role + " tensor at level " + std::to_string(level) + " position " + std::to_string(pos));
    DenseTensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };

  std::optional<Manifest> m;
  if (kind == "scale_invariant") {
    if (doc.contains("n")) parse_error("scale-invariant manifests carry no \"n\"");
    mera::ScaleInvariantMera si;
    si.chi = mera::Disentangler(take("chi", 0, 0));
    si.lam = mera::Isometry(take("lam", 0, 0));
    si.top = mera::TopTensor(take("top", 0, 0));
    m = Manifest{std::move(si)};
  } else if (kind == "finite") {
    const int n = field<int>(doc, "n", "document");
    if (n < 3 || n > 62) parse_error("n must lie in 3..62");
    std::vector<mera::Layer> layers(std::size_t(n - 2));
    for (int k = 1; k <= n - 2; ++k) {
      const std::uint64_t width = std::uint64_t(4) << (n - 2 - k);
      if (width > (std::uint64_t(1) << 26)) parse_error("finite network too large to store explicitly");
      auto& layer = layers[std::size_t(k - 1)];
      for (std::uint64_t p = 0; p < width; ++p) layer.disentanglers.emplace_back(take("chi", k, p));
      for (std::uint64_t p = 0; p < width; ++p) layer.isometries.emplace_back(take("lam", k, p));
    }
    mera::TopTensor top(take("top", n - 2, 0));
    m = Manifest{mera::FiniteMera(n, D, std::move(layers), std::move(top))};
  } else {
    parse_error("unknown kind \"" + kind + "\"");
  }
  if (!tensors.empty()) {
    const auto& [role, level, pos] = tensors.begin()->first;
    parse_error("unexpected " + role + " tensor at level " + std::to_string(level) + " position " + std::to_string(pos));
  }
  return std::move(*m);
}

std::string serialize(const mera::FiniteMera& net) {
  json doc = header("finite", net.bond_dim());
  doc["n"] = net.log2_sites();
  auto& list = doc["tensors"];
  for (int k = 1; k <= net.layer_count(); ++k) {
    const auto& layer = net.layers()[std::size_t(k - 1)];
    for (std::size_t p = 0; p < layer.disentanglers.size(); ++p)
      list.push_back(tensor_json("chi", k, p, layer.disentanglers[p].tensor()));
    for (std::size_t p = 0; p < layer.isometries.size(); ++p)
      list.push_back(tensor_json("lam", k, p, layer.isometries[p].tensor()));
  }
  list.push_back(tensor_json("top", net.layer_count(), 0, net.top().tensor()));
  return doc.dump();
}

std::string serialize(const mera::ScaleInvariantMera& net) {
  json doc = header("scale_invariant", net.bond_dim());
  auto& list = doc["tensors"];
  list.push_back(tensor_json("chi", 0, 0, net.chi.tensor()));
  list.push_back(tensor_json("lam", 0, 0, net.lam.tensor()));
  list.push_back(tensor_json("top", 0, 0, net.top.tensor()));
  return doc.dump();
}

std::string serialize(const Manifest& m) {
  return m.is_finite() ? serialize(m.finite()) : serialize(m.scale_invariant());
}

mera::ValidationReport validate(const Manifest& m) {
  return m.is_finite() ? mera::validate(m.finite()) : mera::validate(m.scale_invariant());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::Io, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(bool(out), ErrorCode::Io, "cannot write " + path);
  out << text;
  require(bool(out.flush()), ErrorCode::Io, "write to " + path + " failed");
}

Manifest load(const std::string& path, bool require_valid) {
  Manifest m = parse(read_file(path));
  if (require_valid) {
    const auto report = validate(m);
    require(report.valid, ErrorCode::Validation,
            path + " violates the contraction rules (max deviation " + std::to_string(report.max_deviation) + ")");
  }
  return m;
}

void save(const std::string& path, const Manifest& m) { write_file(path, serialize(m) + "\n"); }

}  // namespace qumera::manifest
