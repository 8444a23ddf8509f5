#include "isoquad/matrix.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace isoquad {

SymMatrix::SymMatrix(int p) : p_(p) {
  if (p < 0) throw std::invalid_argument("SymMatrix: negative dimension");
  a_.assign(static_cast<size_t>(p) * p, 0.0);
}

SymMatrix::SymMatrix(int p, const std::vector<double>& row_major) : SymMatrix(p) {
  if (row_major.size() != a_.size())
    throw std::invalid_argument("SymMatrix: data size does not match dimension");
  for (double v : row_major)
    if (!std::isfinite(v)) throw std::invalid_argument("SymMatrix: non-finite entry");
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      size_t ij = static_cast<size_t>(i) * p + j;
      size_t ji = static_cast<size_t>(j) * p + i;
      a_[ij] = 0.5 * (row_major[ij] + row_major[ji]);
    }
}

SymMatrix SymMatrix::identity(int p) {
  SymMatrix a(p);
  for (int i = 0; i < p; ++i) a.set(i, i, 1.0);
  return a;
}

void SymMatrix::set(int i, int j, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("SymMatrix::set: non-finite value");
  a_[static_cast<size_t>(i) * p_ + j] = v;
  a_[static_cast<size_t>(j) * p_ + i] = v;
}

double SymMatrix::max_diag() const {
  double m = 0.0;
  for (int i = 0; i < p_; ++i) m = std::max(m, (*this)(i, i));
  return m;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::fabs(v));
  return m;
}

uint64_t matrix_hash(const SymMatrix& a) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : a.values()) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("bad numeric token: '" + token + "'");
  return v;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

std::vector<double> parse_row(const std::string& line, const std::string& path, int lineno) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      row.push_back(parse_double(tok));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad value '" + tok + "'");
    }
  }
  return row;
}

}  // namespace

void write_matrix_csv(const std::string& path, const SymMatrix& a) {
  auto out = open_out(path);
  int p = a.dim();
  out << p << "\n";
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (j) out << ",";
      out << format_double(a(i, j));
    }
    out << "\n";
  }
}

SymMatrix read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  int p = 0;
  try {
    p = std::stoi(line);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":1: expected dimension header, got '" + line + "'");
  }
  if (p <= 0) throw std::runtime_error(path + ":1: dimension must be positive");
  std::vector<double> data;
  data.reserve(static_cast<size_t>(p) * p);
  for (int i = 0; i < p; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": expected " + std::to_string(p) + " rows");
    auto row = parse_row(line, path, i + 2);
    if (static_cast<int>(row.size()) != p)
      throw std::runtime_error(path + ":" + std::to_string(i + 2) + ": expected " +
                               std::to_string(p) + " values, got " + std::to_string(row.size()));
    data.insert(data.end(), row.begin(), row.end());
  }
  return SymMatrix(p, data);
}

void write_design_csv(const std::string& path, const std::vector<double>& x, int n, int p) {
  if (x.size() != static_cast<size_t>(n) * p)
    throw std::invalid_argument("write_design_csv: size mismatch");
  auto out = open_out(path);
  out << n << "," << p << "\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      if (j) out << ",";
      out << format_double(x[static_cast<size_t>(i) * p + j]);
    }
    out << "\n";
  }
}

void read_design_csv(const std::string& path, std::vector<double>& x, int& n, int& p) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = parse_row(line, path, 1);
  if (header.size() != 2)
    throw std::runtime_error(path + ":1: expected 'n,p' header");
  n = static_cast<int>(header[0]);
  p = static_cast<int>(header[1]);
  if (n <= 0 || p <= 0) throw std::runtime_error(path + ":1: n and p must be positive");
  x.clear();
  x.reserve(static_cast<size_t>(n) * p);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": expected " + std::to_string(n) + " rows");
    auto row = parse_row(line, path, i + 2);
    if (static_cast<int>(row.size()) != p)
      throw std::runtime_error(path + ":" + std::to_string(i + 2) + ": expected " +
                               std::to_string(p) + " values");
    x.insert(x.end(), row.begin(), row.end());
  }
}

void write_vector_csv(const std::string& path, const Vector& v) {
  auto out = open_out(path);
  out << v.size() << "\n";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ",";
    out << format_double(v[i]);
  }
  out << "\n";
}

Vector read_vector_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  int p = 0;
  try {
    p = std::stoi(line);
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":1: expected length header");
  }
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing value line");
  auto v = parse_row(line, path, 2);
  if (static_cast<int>(v.size()) != p)
    throw std::runtime_error(path + ":2: expected " + std::to_string(p) + " values");
  return v;
}

}  // namespace isoquad
