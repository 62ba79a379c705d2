#include "ecgforge/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace ecgforge::nn {

namespace {

enum LayerCode : std::uint8_t {
  kConv1d = 1,
  kBatchNorm1d = 2,
  kReLU = 3,
  kMaxPool1d = 4,
  kAdaptiveMaxPool1d = 5,
  kFlatten = 6,
  kLinear = 7,
};

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_u8(std::ostream& out, std::uint8_t v) { put_bytes(out, &v, 1); }

void write_u16(std::ostream& out, std::uint16_t v) {
  std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
  put_bytes(out, b, 2);
}

void write_i64(std::ostream& out, std::int64_t v) {
  std::uint64_t u = static_cast<std::uint64_t>(v);
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(u >> (8 * i));
  put_bytes(out, b, 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  write_i64(out, static_cast<std::int64_t>(u));
}

void get_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw ParseError("checkpoint: truncated stream");
}

std::uint8_t read_u8(std::istream& in) {
  std::uint8_t v;
  get_bytes(in, &v, 1);
  return v;
}

std::uint16_t read_u16(std::istream& in) {
  std::uint8_t b[2];
  get_bytes(in, b, 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::int64_t read_i64(std::istream& in) {
  std::uint8_t b[8];
  get_bytes(in, b, 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<std::int64_t>(u);
}

double read_f64(std::istream& in) {
  std::uint64_t u = static_cast<std::uint64_t>(read_i64(in));
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void write_manifest_entry(std::ostream& out, const Layer& layer) {
  if (auto* c = dynamic_cast<const Conv1d*>(&layer)) {
    write_u8(out, kConv1d);
    write_i64(out, c->in_channels());
    write_i64(out, c->out_channels());
    write_i64(out, c->kernel_size());
    write_i64(out, c->stride());
  } else if (auto* b = dynamic_cast<const BatchNorm1d*>(&layer)) {
    write_u8(out, kBatchNorm1d);
    write_i64(out, b->channels());
    write_f64(out, b->epsilon());
    write_f64(out, b->momentum());
  } else if (dynamic_cast<const ReLU*>(&layer)) {
    write_u8(out, kReLU);
  } else if (auto* m = dynamic_cast<const MaxPool1d*>(&layer)) {
    write_u8(out, kMaxPool1d);
    write_i64(out, m->pool_size());
    write_i64(out, m->stride());
  } else if (auto* a = dynamic_cast<const AdaptiveMaxPool1d*>(&layer)) {
    write_u8(out, kAdaptiveMaxPool1d);
    write_i64(out, a->output_length());
  } else if (dynamic_cast<const Flatten*>(&layer)) {
    write_u8(out, kFlatten);
  } else if (auto* l = dynamic_cast<const Linear*>(&layer)) {
    write_u8(out, kLinear);
    write_i64(out, l->in_features());
    write_i64(out, l->out_features());
  } else {
    throw StateError(std::string("checkpoint: unknown layer kind ") + layer.kind());
  }
}

std::unique_ptr<Layer> read_manifest_entry(std::istream& in) {
  switch (read_u8(in)) {
    case kConv1d: {
      std::int64_t ic = read_i64(in), oc = read_i64(in), k = read_i64(in), s = read_i64(in);
      return std::make_unique<Conv1d>(ic, oc, k, s);
    }
    case kBatchNorm1d: {
      std::int64_t ch = read_i64(in);
      double eps = read_f64(in), mom = read_f64(in);
      return std::make_unique<BatchNorm1d>(ch, eps, mom);
    }
    case kReLU:
      return std::make_unique<ReLU>();
    case kMaxPool1d: {
      std::int64_t sz = read_i64(in), st = read_i64(in);
      return std::make_unique<MaxPool1d>(sz, st);
    }
    case kAdaptiveMaxPool1d:
      return std::make_unique<AdaptiveMaxPool1d>(read_i64(in));
    case kFlatten:
      return std::make_unique<Flatten>();
    case kLinear: {
      std::int64_t i = read_i64(in), o = read_i64(in);
      return std::make_unique<Linear>(i, o);
    }
    default:
      throw ParseError("checkpoint: unknown layer code in manifest");
  }
}

void write_payload(std::ostream& out, Network& net) {
  for (std::int64_t i = 0; i < net.layer_count(); ++i) {
    for (auto& p : net.layer(i).parameters())
      for (double v : p.tensor->data()) write_f64(out, v);
    for (auto& p : net.layer(i).state())
      for (double v : p.tensor->data()) write_f64(out, v);
  }
}

void read_payload(std::istream& in, Network& net) {
  for (std::int64_t i = 0; i < net.layer_count(); ++i) {
    for (auto& p : net.layer(i).parameters())
      for (double& v : p.tensor->data()) v = read_f64(in);
    for (auto& p : net.layer(i).state())
      for (double& v : p.tensor->data()) v = read_f64(in);
  }
}

void write_all(std::ostream& out, Network& net) {
  put_bytes(out, "ECGF", 4);
  write_u16(out, kCheckpointVersion);
  write_i64(out, net.layer_count());
  for (std::int64_t i = 0; i < net.layer_count(); ++i) write_manifest_entry(out, net.layer(i));
  write_i64(out, net.head_boundary());
  write_i64(out, static_cast<std::int64_t>(net.residual_taps().size()));
  for (std::int64_t t : net.residual_taps()) write_i64(out, t);
  write_i64(out, net.tap_width());
  write_payload(out, net);
}

struct Manifest {
  std::vector<std::unique_ptr<Layer>> layers;
  std::int64_t head_boundary;
  std::vector<std::int64_t> taps;
  std::int64_t tap_width;
};

Manifest read_manifest(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, "ECGF", 4) != 0) throw ParseError("checkpoint: bad magic");
  std::uint16_t version = read_u16(in);
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  Manifest m;
  std::int64_t n = read_i64(in);
  for (std::int64_t i = 0; i < n; ++i) m.layers.push_back(read_manifest_entry(in));
  m.head_boundary = read_i64(in);
  std::int64_t taps = read_i64(in);
  for (std::int64_t i = 0; i < taps; ++i) m.taps.push_back(read_i64(in));
  m.tap_width = read_i64(in);
  return m;
}

std::string layer_signature(Layer& layer) {
  std::ostringstream os;
  write_manifest_entry(os, layer);
  return os.str();
}

}  // namespace

void save_checkpoint(const Network& network, std::ostream& out) {
  write_all(out, const_cast<Network&>(network));
  if (!out) throw StateError("checkpoint: write failed");
}

void save_checkpoint(const Network& network, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("checkpoint: cannot open " + path.string() + " for writing");
  save_checkpoint(network, out);
}

Network load_checkpoint(std::istream& in) {
  Manifest m = read_manifest(in);
  Network net;
  for (auto& l : m.layers) net.add(std::move(l));
  net.set_head_boundary(m.head_boundary);
  if (!m.taps.empty()) net.set_residual_taps(std::move(m.taps), m.tap_width);
  read_payload(in, net);
  return net;
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("checkpoint: cannot open " + path.string());
  return load_checkpoint(in);
}

void load_checkpoint_into(Network& network, std::istream& in) {
  Manifest m = read_manifest(in);
  if (static_cast<std::int64_t>(m.layers.size()) != network.layer_count())
    throw ParseError("checkpoint: layer count does not match constructed architecture");
  for (std::int64_t i = 0; i < network.layer_count(); ++i) {
    if (layer_signature(*m.layers[static_cast<std::size_t>(i)]) !=
        layer_signature(network.layer(i)))
      throw ParseError("checkpoint: manifest mismatch at layer " + std::to_string(i));
  }
  if (m.head_boundary != network.head_boundary())
    throw ParseError("checkpoint: head boundary mismatch");
  read_payload(in, network);
}

void load_checkpoint_into(Network& network, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("checkpoint: cannot open " + path.string());
  load_checkpoint_into(network, in);
}

std::vector<std::uint8_t> checkpoint_bytes(const Network& network) {
  std::ostringstream os(std::ios::binary);
  save_checkpoint(network, os);
  std::string s = os.str();
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

std::vector<std::uint8_t> trunk_bytes(Network& network) {
  std::vector<std::uint8_t> out;
  auto append = [&](const Tensor& t) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.raw());
    out.insert(out.end(), p, p + t.size() * static_cast<std::int64_t>(sizeof(double)));
  };
  const std::int64_t boundary =
      network.head_boundary() < 0 ? network.layer_count() : network.head_boundary();
  for (std::int64_t i = 0; i < boundary; ++i) {
    for (auto& p : network.layer(i).parameters()) append(*p.tensor);
    for (auto& p : network.layer(i).state()) append(*p.tensor);
  }
  return out;
}

}  // namespace ecgforge::nn
