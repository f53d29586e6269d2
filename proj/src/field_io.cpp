#include "svx/field_io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace svx {

namespace {

constexpr char kMagic[8] = {'S', 'V', 'X', 'S', 'N', 'A', 'P', '\0'};
constexpr std::uint32_t kEndianMarker = 0x01020304u;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put(bits, 8);
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() {
    const std::uint64_t bits = get(8);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void raw(char* p, std::size_t n) {
    need(n);
    std::memcpy(p, s_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > s_.size()) throw InvalidArgument("snapshot is truncated");
  }
  std::uint64_t get(int bytes) {
    need(bytes);
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_ + b])) << (8 * b);
    pos_ += bytes;
    return v;
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const VortexState& st) {
  Writer w;
  w.raw(kMagic, 8);
  w.u32(kSnapshotVersion);
  w.u32(kEndianMarker);
  const auto& g = st.geom;
  w.i32(g.ns);
  w.i32(g.nt);
  w.f64(g.ls);
  w.f64(g.lt);
  for (double l : g.lambda) w.f64(l);
  w.i32(st.z.n);
  w.i32(st.a.r);
  for (int d : st.a.degree) w.i64(d);
  w.f64(st.epsilon);
  for (const cplx& v : st.z.v) {
    w.f64(v.real());
    w.f64(v.imag());
  }
  for (double x : st.a.as) w.f64(x);
  for (double x : st.a.at) w.f64(x);
  return w.take();
}

VortexState decode_snapshot(const std::string& bytes) {
  Reader rd(bytes);
  char magic[8];
  rd.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw InvalidArgument("not an svx snapshot");
  const std::uint32_t version = rd.u32();
  if (version != kSnapshotVersion)
    throw SnapshotVersionMismatch("snapshot version " + std::to_string(version) +
                                  ", expected " + std::to_string(kSnapshotVersion));
  if (rd.u32() != kEndianMarker) throw InvalidArgument("snapshot endianness marker is corrupt");
  const int ns = rd.i32();
  const int nt = rd.i32();
  const double ls = rd.f64();
  const double lt = rd.f64();
  if (ns < 4 || nt < 4 || ns > (1 << 14) || nt > (1 << 14))
    throw InvalidArgument("snapshot has implausible grid size");
  LambdaSpec lam;
  lam.table.resize(static_cast<std::size_t>(ns) * nt);
  for (double& l : lam.table) l = rd.f64();
  VortexState st;
  st.geom = make_torus(ns, nt, ls, lt, lam);
  const int n = rd.i32();
  const int r = rd.i32();
  if (n <= 0 || r <= 0 || n > 64 || r > 64) throw InvalidArgument("snapshot has implausible N or r");
  const int sites = ns * nt;
  st.a = LinkField(sites, r);
  for (int j = 0; j < r; ++j) st.a.degree[j] = static_cast<int>(rd.i64());
  st.epsilon = rd.f64();
  st.z = SiteField(sites, n);
  for (cplx& v : st.z.v) {
    const double re = rd.f64();
    const double im = rd.f64();
    v = cplx(re, im);
  }
  for (double& x : st.a.as) x = rd.f64();
  for (double& x : st.a.at) x = rd.f64();
  if (!rd.done()) throw InvalidArgument("snapshot has trailing bytes");
  return st;
}

void write_snapshot(const std::string& path, const VortexState& state) {
  atomic_write(path, encode_snapshot(state));
}

VortexState read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open snapshot " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_snapshot(ss.str());
}

std::string section_csv(const TorusGeometry& geom, const SiteField& z) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# svx-field v1 section ns=" << geom.ns << " nt=" << geom.nt << " n=" << z.n << "\n";
  os << "site,i,j";
  for (int nu = 0; nu < z.n; ++nu) os << ",re_" << nu << ",im_" << nu;
  os << ",abs2\n";
  for (int k = 0; k < geom.num_sites(); ++k) {
    os << k << ',' << geom.i_of(k) << ',' << geom.j_of(k);
    double a2 = 0.0;
    for (int nu = 0; nu < z.n; ++nu) {
      os << ',' << z(k, nu).real() << ',' << z(k, nu).imag();
      a2 += std::norm(z(k, nu));
    }
    os << ',' << a2 << '\n';
  }
  return os.str();
}

std::string connection_csv(const TorusGeometry& geom, const LinkField& a) {
  const std::vector<double> f = site_curvature(geom, a);
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# svx-field v1 connection ns=" << geom.ns << " nt=" << geom.nt << " r=" << a.r << "\n";
  os << "site,i,j";
  for (int j = 0; j < a.r; ++j) os << ",as_" << j;
  for (int j = 0; j < a.r; ++j) os << ",at_" << j;
  for (int j = 0; j < a.r; ++j) os << ",f_" << j;
  os << '\n';
  for (int k = 0; k < geom.num_sites(); ++k) {
    os << k << ',' << geom.i_of(k) << ',' << geom.j_of(k);
    for (int j = 0; j < a.r; ++j) os << ',' << a.as[k * a.r + j];
    for (int j = 0; j < a.r; ++j) os << ',' << a.at[k * a.r + j];
    for (int j = 0; j < a.r; ++j) os << ',' << f[k * a.r + j];
    os << '\n';
  }
  return os.str();
}

void atomic_write(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace svx
