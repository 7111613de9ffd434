#include "phasekit/io.hpp"

#include "phasekit/forward.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phasekit {

namespace {

constexpr char kMagic[4] = {'P', 'K', 'S', 'G'};
constexpr std::uint8_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("PKSG: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_signal(std::ostream& os, const Signal& s) {
  os.write(kMagic, 4);
  os.put(static_cast<char>(kVersion));
  os.put(static_cast<char>(s.ndim()));
  for (int a = 0; a < s.ndim(); ++a) put_u64(os, static_cast<std::uint64_t>(s.dim(a)));
  for (Index i = 0; i < s.size(); ++i) {
    put_f64(os, s[i].real());
    put_f64(os, s[i].imag());
  }
}

Signal read_signal(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("PKSG: bad magic");
  int version = is.get();
  if (version != kVersion) throw std::runtime_error("PKSG: unsupported version");
  int ndim = is.get();
  if (ndim != 1 && ndim != 2) throw std::runtime_error("PKSG: bad ndim");
  Shape shape = ndim == 1 ? Shape::of1d(0) : Shape::of2d(0, 0);
  for (int a = 0; a < ndim; ++a) {
    std::uint64_t d = get_u64(is);
    if (d == 0 || d > (1ULL << 32)) throw std::runtime_error("PKSG: bad dimension");
    shape.dims[static_cast<size_t>(a)] = static_cast<Index>(d);
  }
  if (ndim == 1) shape.dims[1] = 1;
  CVector v(shape.count());
  for (Index i = 0; i < v.size(); ++i) {
    double re = get_f64(is);
    double im = get_f64(is);
    v(i) = Complex(re, im);
  }
  if (!is) throw std::runtime_error("PKSG: truncated data");
  return Signal(shape, std::move(v));
}

void write_signal_file(const std::string& path, const Signal& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_signal(os, s);
}

void write_signals_file(const std::string& path, const std::vector<Signal>& sigs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& s : sigs) write_signal(os, s);
}

Signal read_signal_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_signal(is);
}

std::vector<Signal> read_signals_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::vector<Signal> out;
  while (is.peek() != std::char_traits<char>::eof()) out.push_back(read_signal(is));
  if (out.empty()) throw std::runtime_error("PKSG: empty file: " + path);
  return out;
}

void write_signal_csv(const std::string& path, const Signal& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  if (s.ndim() == 1) {
    os << "i,re,im\n";
    for (Index i = 0; i < s.size(); ++i)
      os << i << ',' << fmt_double(s[i].real()) << ',' << fmt_double(s[i].imag()) << '\n';
  } else {
    os << "i,j,re,im\n";
    for (Index i = 0; i < s.dim(0); ++i)
      for (Index j = 0; j < s.dim(1); ++j) {
        Complex v = s.at(i, j);
        os << i << ',' << j << ',' << fmt_double(v.real()) << ',' << fmt_double(v.imag()) << '\n';
      }
  }
}

Signal read_signal_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string header;
  std::getline(is, header);
  bool twoD = header.rfind("i,j,", 0) == 0;
  std::vector<double> re, im;
  std::vector<Index> ii, jj;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ls, tok, ',')) toks.push_back(tok);
    size_t want = twoD ? 4 : 3;
    if (toks.size() != want) throw std::runtime_error("signal CSV: malformed row: " + line);
    size_t p = 0;
    ii.push_back(std::stoll(toks[p++]));
    if (twoD) jj.push_back(std::stoll(toks[p++]));
    re.push_back(std::stod(toks[p++]));
    im.push_back(std::stod(toks[p]));
  }
  if (re.empty()) throw std::runtime_error("signal CSV: no data rows");
  Shape shape;
  if (twoD) {
    Index r = 0, c = 0;
    for (size_t k = 0; k < ii.size(); ++k) {
      r = std::max(r, ii[k] + 1);
      c = std::max(c, jj[k] + 1);
    }
    shape = Shape::of2d(r, c);
  } else {
    Index n = 0;
    for (Index i : ii) n = std::max(n, i + 1);
    shape = Shape::of1d(n);
  }
  CVector v = CVector::Zero(shape.count());
  for (size_t k = 0; k < re.size(); ++k) {
    Index flat = twoD ? ii[k] * shape.dim(1) + jj[k] : ii[k];
    v(flat) = Complex(re[k], im[k]);
  }
  return Signal(shape, std::move(v));
}

void write_observation_csv(const std::string& path, const Observation& obs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "# dims:";
  for (Index d : obs.dims) os << ' ' << d;
  os << '\n';
  if (obs.noise.kind == NoiseKind::Poisson)
    os << "# noise: poisson " << fmt_double(obs.noise.photonBudget) << '\n';
  else
    os << "# noise: none\n";
  const bool twoD = obs.dims.size() == 2;
  os << (twoD ? "i,j,y,valid\n" : "i,y,valid\n");
  for (Index k = 0; k < obs.count(); ++k) {
    if (twoD)
      os << (k / obs.dims[1]) << ',' << (k % obs.dims[1]) << ',';
    else
      os << k << ',';
    os << fmt_double(obs.y(k)) << ',' << (obs.valid(k) ? 1 : 0) << '\n';
  }
}

Observation read_observation_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  Observation obs;
  std::string line;
  std::vector<double> ys;
  std::vector<bool> valids;
  bool sawHeader = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "dims:") {
        Index d;
        while (ls >> d) obs.dims.push_back(d);
      } else if (key == "noise:") {
        std::string kind;
        ls >> kind;
        if (kind == "poisson") {
          obs.noise.kind = NoiseKind::Poisson;
          ls >> obs.noise.photonBudget;
        }
      }
      continue;
    }
    if (!sawHeader) {  // column header row
      sawHeader = true;
      continue;
    }
    std::istringstream ls(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ls, tok, ',')) toks.push_back(tok);
    if (toks.size() < 3) throw std::runtime_error("observation CSV: malformed row: " + line);
    ys.push_back(std::stod(toks[toks.size() - 2]));
    valids.push_back(std::stoi(toks.back()) != 0);
  }
  if (ys.empty()) throw std::runtime_error("observation CSV: no data rows");
  obs.y = Eigen::Map<const RVector>(ys.data(), static_cast<Index>(ys.size()));
  obs.valid = BoolArray(static_cast<Index>(valids.size()));
  for (size_t i = 0; i < valids.size(); ++i) obs.valid(static_cast<Index>(i)) = valids[i];
  if (obs.dims.empty()) obs.dims = {obs.y.size()};
  Index prod = 1;
  for (Index d : obs.dims) prod *= d;
  if (prod != obs.y.size()) throw std::runtime_error("observation CSV: dims do not match row count");
  return obs;
}

}  // namespace phasekit
