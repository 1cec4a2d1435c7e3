#include "fcl/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fcl {

std::string mode_name(Mode m) {
  return m == Mode::Periodic ? "periodic" : "free";
}

Mode parse_mode(const std::string& name) {
  if (name == "periodic") return Mode::Periodic;
  if (name == "free") return Mode::Free;
  throw std::invalid_argument("unknown boundary mode: " + name);
}

double DomainSpec::cellVolume() const {
  double v = 1.0;
  for (int a = 0; a < n; ++a) v *= cellSize;
  return v;
}

bool DomainSpec::operator==(const DomainSpec& o) const {
  return n == o.n && dims == o.dims && L == o.L && mode == o.mode && s == o.s;
}

DomainSpec make_domain(int n, const std::vector<int>& dims, double L, Mode mode,
                       double s) {
  if (n < 1 || n > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if ((int)dims.size() != n)
    throw std::invalid_argument("dims must list one extent per axis");
  if (!(L > 0.0)) throw std::invalid_argument("L must be positive");
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0,1)");
  DomainSpec d;
  d.n = n;
  d.L = L;
  d.mode = mode;
  d.s = s;
  for (int a = 0; a < n; ++a) {
    if (dims[a] < 2) throw std::invalid_argument("all dims must be >= 2");
    d.dims[a] = dims[a];
  }
  d.cellSize = L / dims[0];
  for (int a = 1; a < n; ++a) {
    if (dims[a] != dims[0])
      throw std::invalid_argument("non-uniform cellSize: all dims must be equal");
  }
  return d;
}

void validate_grid(const LabelGrid& g) {
  if ((int)g.labels.size() != g.domain.cells())
    throw std::invalid_argument("label array does not match domain size");
  if (g.N < 1 || g.N > 255) throw std::invalid_argument("chamber count out of range");
  for (int i = 0; i < (int)g.labels.size(); ++i) {
    if (g.labels[i] > g.N)
      throw std::invalid_argument("label exceeds chamber count");
    if (g.domain.mode == Mode::Free && g.labels[i] >= 1 &&
        g.domain.onOuterLayer(i))
      throw std::invalid_argument(
          "free mode: chambers may not occupy the outer cell layer");
  }
}

VolumeVector volumes(const LabelGrid& g) {
  VolumeVector m(g.N, 0.0);
  for (auto lab : g.labels)
    if (lab >= 1) m[lab - 1] += 1.0;
  double vc = g.domain.cellVolume();
  for (auto& v : m) v *= vc;
  return m;
}

double exterior_volume_in_box(const LabelGrid& g) {
  long long c = 0;
  for (auto lab : g.labels)
    if (lab == 0) ++c;
  return c * g.domain.cellVolume();
}

double relative_distance(const LabelGrid& a, const LabelGrid& b,
                         const Mask& region) {
  if (!(a.domain == b.domain) || a.N != b.N)
    throw std::invalid_argument("relative_distance: domain or N mismatch");
  if (region.size() != a.labels.size())
    throw std::invalid_argument("relative_distance: region size mismatch");
  long long count = 0;
  for (size_t i = 0; i < a.labels.size(); ++i) {
    if (region[i] && a.labels[i] != b.labels[i]) count += 2;  // two chambers differ
  }
  return count * a.domain.cellVolume();
}

double relative_distance(const LabelGrid& a, const LabelGrid& b) {
  Mask all(a.labels.size(), 1);
  return relative_distance(a, b, all);
}

namespace {

// Axis neighbor of cell idx in direction (axis, step); returns -1 when the
// neighbor falls outside the box in free mode.
int neighbor(const DomainSpec& d, int idx, int axis, int step) {
  auto c = d.coords(idx);
  c[axis] += step;
  if (c[axis] < 0 || c[axis] >= d.dims[axis]) {
    if (d.mode == Mode::Periodic)
      c[axis] = (c[axis] + d.dims[axis]) % d.dims[axis];
    else
      return -1;
  }
  return d.index(c);
}

}  // namespace

std::vector<int> boundary_cells(const LabelGrid& g, int h) {
  if (h < 0 || h > g.N) throw std::invalid_argument("chamber index out of range");
  std::vector<int> out;
  const auto& d = g.domain;
  for (int i = 0; i < (int)g.labels.size(); ++i) {
    if (g.labels[i] != h) continue;
    bool bd = false;
    for (int a = 0; a < d.n && !bd; ++a) {
      for (int st = -1; st <= 1 && !bd; st += 2) {
        int j = neighbor(d, i, a, st);
        int lab = (j < 0) ? 0 : g.labels[j];  // outside the box = exterior
        if (lab != h) bd = true;
      }
    }
    if (bd) out.push_back(i);
  }
  return out;
}

Mask cluster_boundary(const LabelGrid& g) {
  Mask m(g.labels.size(), 0);
  for (int h = 1; h <= g.N; ++h)
    for (int i : boundary_cells(g, h)) m[i] = 1;
  return m;
}

Mask chamber_mask(const LabelGrid& g, int h) {
  Mask m(g.labels.size(), 0);
  for (size_t i = 0; i < g.labels.size(); ++i) m[i] = (g.labels[i] == h);
  return m;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string header_text(const DomainSpec& d, int N, const char* magic) {
  std::ostringstream os;
  os << magic << " 1\n";
  os << "n " << d.n << "\n";
  os << "dims";
  for (int a = 0; a < d.n; ++a) os << " " << d.dims[a];
  os << "\n";
  os << "L " << fmt_double(d.L) << "\n";
  os << "N " << N << "\n";
  os << "s " << fmt_double(d.s) << "\n";
  os << "mode " << mode_name(d.mode) << "\n";
  return os.str();
}

struct HeaderFields {
  DomainSpec domain;
  int N = 0;
  int fields = -1;
  size_t payloadStart = 0;
};

HeaderFields parse_header(const std::vector<std::uint8_t>& bytes,
                          const char* magic) {
  std::string text(bytes.begin(), bytes.end());
  size_t pos = 0;
  auto next_line = [&]() -> std::string {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) throw std::invalid_argument("truncated header");
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  std::string first = next_line();
  if (first != std::string(magic) + " 1")
    throw std::invalid_argument(std::string("bad magic, expected '") + magic +
                                " 1'");
  int n = 0, N = 0, fields = -1;
  std::vector<int> dims;
  double L = 0, s = 0;
  Mode mode = Mode::Periodic;
  bool haveN = false;
  while (true) {
    std::string line = next_line();
    if (line.empty()) break;
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "n")
      is >> n;
    else if (key == "dims") {
      int v;
      while (is >> v) dims.push_back(v);
      if (dims.empty()) throw std::invalid_argument("empty dims header");
      is.clear();  // the extraction loop always ends in a failed state
    } else if (key == "L")
      is >> L;
    else if (key == "N") {
      is >> N;
      haveN = true;
    } else if (key == "s")
      is >> s;
    else if (key == "mode") {
      std::string m;
      is >> m;
      mode = parse_mode(m);
    } else if (key == "fields")
      is >> fields;
    else
      throw std::invalid_argument("unknown header key: " + key);
    if (is.fail()) throw std::invalid_argument("malformed header line: " + line);
  }
  if (!haveN) throw std::invalid_argument("header missing N");
  HeaderFields h;
  h.domain = make_domain(n, dims, L, mode, s);
  h.N = N;
  h.fields = fields;
  h.payloadStart = pos;
  return h;
}

}  // namespace

std::vector<std::uint8_t> serialize_grid(const LabelGrid& g) {
  validate_grid(g);
  std::string head = header_text(g.domain, g.N, "FCLG");
  head += "\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), g.labels.begin(), g.labels.end());
  return out;
}

LabelGrid parse_grid(const std::vector<std::uint8_t>& bytes) {
  HeaderFields h = parse_header(bytes, "FCLG");
  size_t want = (size_t)h.domain.cells();
  if (bytes.size() - h.payloadStart < want)
    throw std::invalid_argument("truncated payload");
  LabelGrid g;
  g.domain = h.domain;
  g.N = h.N;
  g.labels.assign(bytes.begin() + h.payloadStart,
                  bytes.begin() + h.payloadStart + want);
  validate_grid(g);
  return g;
}

std::vector<std::uint8_t> serialize_soft(const SoftCluster& sc) {
  if ((int)sc.fields.size() != sc.N)
    throw std::invalid_argument("soft cluster field count mismatch");
  std::string head = header_text(sc.domain, sc.N, "FCLS");
  head += "fields " + std::to_string(sc.N) + "\n\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  size_t M = sc.domain.cells();
  for (const auto& f : sc.fields) {
    if (f.size() != M) throw std::invalid_argument("field size mismatch");
    const auto* p = reinterpret_cast<const std::uint8_t*>(f.data());
    out.insert(out.end(), p, p + M * sizeof(double));  // little-endian host
  }
  return out;
}

SoftCluster parse_soft(const std::vector<std::uint8_t>& bytes) {
  HeaderFields h = parse_header(bytes, "FCLS");
  if (h.fields != h.N)
    throw std::invalid_argument("FCLS: fields count must equal N");
  size_t M = (size_t)h.domain.cells();
  if (bytes.size() - h.payloadStart < h.N * M * sizeof(double))
    throw std::invalid_argument("truncated payload");
  SoftCluster sc;
  sc.domain = h.domain;
  sc.N = h.N;
  sc.fields.resize(h.N);
  size_t off = h.payloadStart;
  for (int k = 0; k < h.N; ++k) {
    sc.fields[k].resize(M);
    std::memcpy(sc.fields[k].data(), bytes.data() + off, M * sizeof(double));
    off += M * sizeof(double);
  }
  return sc;
}

namespace {
std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), {});
}
void write_all(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}
}  // namespace

LabelGrid read_grid_file(const std::string& path) { return parse_grid(read_all(path)); }
void write_grid_file(const LabelGrid& g, const std::string& path) {
  write_all(serialize_grid(g), path);
}
SoftCluster read_soft_file(const std::string& path) { return parse_soft(read_all(path)); }
void write_soft_file(const SoftCluster& sc, const std::string& path) {
  write_all(serialize_soft(sc), path);
}

LabelGrid seed_cluster(const DomainSpec& d, int N, const SeedDescriptor& sd) {
  if (N < 1) throw std::invalid_argument("need at least one chamber");
  if ((int)sd.volumes.size() != N)
    throw std::invalid_argument("seed descriptor must give one volume per chamber");
  double boxVol = std::pow(d.L, d.n);
  double total = std::accumulate(sd.volumes.begin(), sd.volumes.end(), 0.0);
  for (double m : sd.volumes)
    if (!(m > 0.0)) throw std::invalid_argument("chamber volumes must be positive");
  if (d.mode == Mode::Free ? !(total < boxVol) : !(total <= boxVol))
    throw std::invalid_argument("requested volumes do not fit in the box");

  LabelGrid g;
  g.domain = d;
  g.N = N;
  g.labels.assign(d.cells(), 0);

  if (sd.kind == SeedDescriptor::Kind::Random) {
    std::vector<int> eligible;
    for (int i = 0; i < d.cells(); ++i)
      if (d.mode == Mode::Periodic || !d.onOuterLayer(i)) eligible.push_back(i);
    std::vector<long long> counts(N);
    long long sum = 0;
    for (int h = 0; h < N; ++h) {
      counts[h] = std::llround(sd.volumes[h] / d.cellVolume());
      sum += counts[h];
    }
    if (sum > (long long)eligible.size())
      throw std::invalid_argument("requested volumes exceed available cells");
    std::mt19937_64 rng(sd.seed);
    std::shuffle(eligible.begin(), eligible.end(), rng);
    size_t k = 0;
    for (int h = 0; h < N; ++h)
      for (long long c = 0; c < counts[h]; ++c) g.labels[eligible[k++]] = h + 1;
    return g;
  }

  // Ball mode.
  double omega = (d.n == 1) ? 2.0 : (d.n == 2 ? M_PI : 4.0 * M_PI / 3.0);
  std::vector<double> radii(N);
  for (int h = 0; h < N; ++h)
    radii[h] = std::pow(sd.volumes[h] / omega, 1.0 / d.n);

  std::vector<std::array<double, 3>> centers = sd.centers;
  if (centers.empty()) {
    // Evenly spaced along axis 0, centered on the other axes.
    for (int h = 0; h < N; ++h) {
      std::array<double, 3> c{0, 0, 0};
      c[0] = d.L * (h + 0.5) / N;
      for (int a = 1; a < d.n; ++a) c[a] = d.L / 2;
      centers.push_back(c);
    }
  }
  if ((int)centers.size() != N)
    throw std::invalid_argument("need one center per chamber");
  for (int h = 0; h < N; ++h)
    for (int k = h + 1; k < N; ++k) {
      double dist2 = 0;
      for (int a = 0; a < d.n; ++a) {
        double dd = centers[h][a] - centers[k][a];
        if (d.mode == Mode::Periodic)
          dd = dd - d.L * std::round(dd / d.L);
        dist2 += dd * dd;
      }
      if (std::sqrt(dist2) < radii[h] + radii[k])
        throw std::invalid_argument("requested balls overlap");
    }
  for (int i = 0; i < d.cells(); ++i) {
    if (d.mode == Mode::Free && d.onOuterLayer(i)) continue;
    auto x = d.center(i);
    for (int h = 0; h < N; ++h) {
      double dist2 = 0;
      for (int a = 0; a < d.n; ++a) {
        double dd = x[a] - centers[h][a];
        if (d.mode == Mode::Periodic) dd = dd - d.L * std::round(dd / d.L);
        dist2 += dd * dd;
      }
      if (dist2 <= radii[h] * radii[h]) {
        g.labels[i] = h + 1;
        break;
      }
    }
  }
  validate_grid(g);
  return g;
}

}  // namespace fcl
