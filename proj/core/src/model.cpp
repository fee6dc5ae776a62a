#include "pinnafe/model.hpp"

#include <cstdio>
#include <cstring>

#include "pinnafe/errors.hpp"
#include "pinnafe/rng.hpp"

namespace pinnafe {

ModelLayout ModelLayout::build(const ModelDims& dims) {
  ModelLayout L;
  int off = 0;
  const int heads = dims.agg == AggMode::Identity ? 0 : dims.heads;
  for (int m = 0; m < heads; ++m) {
    L.q.push_back(off);
    off += dims.d_k * dims.n;
    L.k.push_back(off);
    off += dims.d_k * dims.n;
    L.v.push_back(off);
    off += dims.n * dims.n;
  }
  L.proj = off;
  off += dims.m_out * dims.proj_in();
  L.proj_b = off;
  off += dims.m_out;
  L.wz.assign(size_t(dims.depth), -1);
  L.wy.assign(size_t(dims.depth), -1);
  L.b.assign(size_t(dims.depth), -1);
  for (int k = 0; k < dims.depth; ++k) {
    if (k > 0) {
      L.wz[size_t(k)] = off;
      off += dims.width * dims.width;
    }
    L.wy[size_t(k)] = off;
    off += dims.width * dims.m_out;
    L.b[size_t(k)] = off;
    off += dims.width;
  }
  L.rz = off;
  off += dims.width;
  L.ry = off;
  off += dims.m_out;
  L.rb = off;
  off += 1;
  L.total = off;
  return L;
}

ModelParams ModelParams::init(const ModelDims& dims, uint64_t seed) {
  ModelParams P;
  P.dims = dims;
  P.layout = ModelLayout::build(dims);
  P.theta.assign(size_t(P.layout.total), 0.0);

  const double sn = 1.0 / std::sqrt(double(dims.n));
  const double sm = 1.0 / std::sqrt(double(dims.m_out));
  const int heads = dims.agg == AggMode::Identity ? 0 : dims.heads;

  Rng rq = substream(seed, "attention.q");
  Rng rk = substream(seed, "attention.k");
  Rng rv = substream(seed, "attention.v");
  Rng rp = substream(seed, "attention.proj");
  Rng ry = substream(seed, "icnn.wy");
  Rng rr = substream(seed, "icnn.readout");

  for (int m = 0; m < heads; ++m) {
    double* q = P.block(P.layout.q[size_t(m)]);
    double* k = P.block(P.layout.k[size_t(m)]);
    for (int i = 0; i < dims.d_k * dims.n; ++i) {
      q[i] = rq.uniform(-sn, sn);
      k[i] = rk.uniform(-sn, sn);
    }
    // value maps start near identity so the pipeline passes features through
    // until the gates learn something useful
    double* v = P.block(P.layout.v[size_t(m)]);
    for (int i = 0; i < dims.n; ++i)
      for (int j = 0; j < dims.n; ++j)
        v[i * dims.n + j] = (i == j ? 1.0 : 0.0) + 0.1 * rv.uniform(-sn, sn);
  }

  // projection near identity on the first min(m_out, proj_in) channels
  double* proj = P.block(P.layout.proj);
  const int pin = dims.proj_in();
  for (int i = 0; i < dims.m_out; ++i)
    for (int j = 0; j < pin; ++j)
      proj[i * pin + j] = (i == j ? 1.0 : 0.0) + 0.01 * rp.uniform(-1.0, 1.0);

  const double rawz = softplus_inv(1.0 / double(dims.width));
  for (int k = 0; k < dims.depth; ++k) {
    if (k > 0) {
      double* wz = P.block(P.layout.wz[size_t(k)]);
      for (int i = 0; i < dims.width * dims.width; ++i) wz[i] = rawz;
    }
    double* wy = P.block(P.layout.wy[size_t(k)]);
    for (int i = 0; i < dims.width * dims.m_out; ++i)
      wy[i] = ry.uniform(-sm, sm);
  }
  double* rz = P.block(P.layout.rz);
  for (int i = 0; i < dims.width; ++i) rz[i] = rawz;
  double* ryp = P.block(P.layout.ry);
  for (int i = 0; i < dims.m_out; ++i) ryp[i] = rr.uniform(-sm, sm);
  return P;
}

ModelParams ModelParams::unflatten(const ModelDims& dims,
                                   const std::vector<double>& flat) {
  ModelParams P;
  P.dims = dims;
  P.layout = ModelLayout::build(dims);
  if (int(flat.size()) != P.layout.total)
    throw SizeMismatch("flat parameter vector has " +
                       std::to_string(flat.size()) + " entries, layout needs " +
                       std::to_string(P.layout.total));
  P.theta = flat;
  return P;
}

namespace {
constexpr uint32_t kMagic = 0x45464150u;  // "PAFE" little-endian
constexpr uint32_t kVersion = 1;

void put_u32(FILE* f, uint32_t v) { std::fwrite(&v, 4, 1, f); }
void put_u64(FILE* f, uint64_t v) { std::fwrite(&v, 8, 1, f); }
uint32_t get_u32(FILE* f) {
  uint32_t v = 0;
  if (std::fread(&v, 4, 1, f) != 1) throw IoError("checkpoint truncated");
  return v;
}
uint64_t get_u64(FILE* f) {
  uint64_t v = 0;
  if (std::fread(&v, 8, 1, f) != 1) throw IoError("checkpoint truncated");
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     uint64_t seed, const std::string& pool_tag) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write checkpoint: " + path);
  put_u32(f, kMagic);
  put_u32(f, kVersion);
  const ModelDims& d = params.dims;
  int32_t ints[8] = {d.d, d.n, d.heads, d.d_k, d.m_out, d.depth, d.width,
                     int32_t(d.agg)};
  std::fwrite(ints, 4, 8, f);
  put_u64(f, seed);
  put_u32(f, uint32_t(pool_tag.size()));
  std::fwrite(pool_tag.data(), 1, pool_tag.size(), f);
  put_u64(f, uint64_t(params.theta.size()));
  std::fwrite(params.theta.data(), 8, params.theta.size(), f);
  std::fclose(f);
}

ModelParams load_checkpoint(const std::string& path, uint64_t* seed_out,
                            std::string* pool_tag_out) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot read checkpoint: " + path);
  struct Closer {
    FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};
  if (get_u32(f) != kMagic) throw IoError("not a checkpoint file: " + path);
  if (get_u32(f) != kVersion) throw IoError("unsupported checkpoint version");
  int32_t ints[8];
  if (std::fread(ints, 4, 8, f) != 8) throw IoError("checkpoint truncated");
  ModelDims dims;
  dims.d = ints[0];
  dims.n = ints[1];
  dims.heads = ints[2];
  dims.d_k = ints[3];
  dims.m_out = ints[4];
  dims.depth = ints[5];
  dims.width = ints[6];
  dims.agg = AggMode(ints[7]);
  uint64_t seed = get_u64(f);
  uint32_t taglen = get_u32(f);
  std::string tag(taglen, '\0');
  if (taglen && std::fread(tag.data(), 1, taglen, f) != taglen)
    throw IoError("checkpoint truncated");
  uint64_t count = get_u64(f);
  std::vector<double> flat(count);
  if (count && std::fread(flat.data(), 8, count, f) != count)
    throw IoError("checkpoint truncated");
  if (seed_out) *seed_out = seed;
  if (pool_tag_out) *pool_tag_out = tag;
  return ModelParams::unflatten(dims, flat);
}

}  // namespace pinnafe
