#include "flatflow/grid.hpp"

#include "flatflow/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace flatflow {

GridDomain::GridDomain(Index nx, Index ny, double dx, Boundary bc) : nx_(nx), ny_(ny), dx_(dx), bc_(bc) {
  if (nx < 1 || ny < 1) {
    throw DomainError("grid dimensions must be positive");
  }
  // wrapped stencils reach two cells
  if (bc == Boundary::Periodic && (nx < 4 || ny < 4)) {
    throw DomainError("periodic grids need at least 4 cells per axis");
  }
  if (!(dx > 0.0) || !std::isfinite(dx)) {
    throw DomainError("grid spacing must be positive and finite");
  }
}

double GridDomain::diameter() const { return std::hypot(width(), height()); }

void require_same_domain(const GridDomain& a, const GridDomain& b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": operands live on different grids");
  }
}

BinarySet::BinarySet(const GridDomain& domain)
    : domain_(domain), mask_(MaskArray::Zero(domain.ny(), domain.nx())) {}

BinarySet::BinarySet(const GridDomain& domain, MaskArray mask) : domain_(domain), mask_(std::move(mask)) {
  if (mask_.rows() != domain_.ny() || mask_.cols() != domain_.nx()) {
    throw DomainError("mask shape does not match grid dimensions");
  }
  mask_ = (mask_ != 0).cast<std::uint8_t>();
}

Index BinarySet::count() const { return (mask_ != 0).count(); }

BinarySet BinarySet::complement() const {
  return BinarySet(domain_, (mask_ == 0).cast<std::uint8_t>());
}

ScalarField::ScalarField(const GridDomain& domain, double fill)
    : domain_(domain), values_(Field<double>::Constant(domain.ny(), domain.nx(), fill)) {
  if (!std::isfinite(fill)) {
    throw DomainError("scalar field values must be finite");
  }
}

ScalarField::ScalarField(const GridDomain& domain, Field<double> values)
    : domain_(domain), values_(std::move(values)) {
  if (values_.rows() != domain_.ny() || values_.cols() != domain_.nx()) {
    throw DomainError("field shape does not match grid dimensions");
  }
  if (!values_.isFinite().all()) {
    throw DomainError("scalar field values must be finite");
  }
}

BinarySet indicator_union(const BinarySet& a, const BinarySet& b) {
  require_same_domain(a.domain(), b.domain(), "union");
  return BinarySet(a.domain(), a.mask().max(b.mask()));
}

BinarySet indicator_intersection(const BinarySet& a, const BinarySet& b) {
  require_same_domain(a.domain(), b.domain(), "intersection");
  return BinarySet(a.domain(), a.mask().min(b.mask()));
}

double volume(const BinarySet& s) {
  return static_cast<double>(s.count()) * s.domain().cell_volume();
}

Index sym_diff_cells(const BinarySet& a, const BinarySet& b) {
  require_same_domain(a.domain(), b.domain(), "sym_diff_volume");
  return (a.mask() != b.mask()).count();
}

double sym_diff_volume(const BinarySet& a, const BinarySet& b) {
  return static_cast<double>(sym_diff_cells(a, b)) * a.domain().cell_volume();
}

std::uint64_t fingerprint(const BinarySet& s) {
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&hash](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ull;
    }
  };
  const auto& d = s.domain();
  const std::int64_t dims[2] = {d.nx(), d.ny()};
  const double dx = d.dx();
  mix(dims, sizeof(dims));
  mix(&dx, sizeof(dx));
  mix(s.mask().data(), static_cast<std::size_t>(s.mask().size()));
  return hash;
}

BinarySet translated(const BinarySet& s, Index dy, Index dx) {
  const auto& d = s.domain();
  MaskArray out = MaskArray::Zero(d.ny(), d.nx());
  for (Index iy = 0; iy < d.ny(); ++iy) {
    for (Index ix = 0; ix < d.nx(); ++ix) {
      const Index ty = iy + dy;
      const Index tx = ix + dx;
      if (ty >= 0 && ty < d.ny() && tx >= 0 && tx < d.nx()) {
        out(ty, tx) = s.mask()(iy, ix);
      }
    }
  }
  return BinarySet(d, std::move(out));
}

BinarySet rotated90(const BinarySet& s) {
  const auto& d = s.domain();
  if (d.nx() != d.ny()) {
    throw DomainError("rotation requires a square grid");
  }
  const Index n = d.nx();
  MaskArray out(n, n);
  for (Index iy = 0; iy < n; ++iy) {
    for (Index ix = 0; ix < n; ++ix) {
      out(n - 1 - ix, iy) = s.mask()(iy, ix);
    }
  }
  return BinarySet(d, std::move(out));
}

namespace {

constexpr const char* kMaskMagic = "FLATFLOW-MASK";
constexpr const char* kFieldMagic = "FLATFLOW-FIELD";
constexpr Index kMaxCells = Index{1} << 31;

std::string format_header(const char* magic, const GridDomain& d) {
  std::ostringstream os;
  os.precision(17);
  os << magic << " dims 2 " << d.nx() << ' ' << d.ny() << " spacing " << d.dx() << " boundary "
     << (d.boundary() == Boundary::Periodic ? "periodic" : "neumann") << '\n';
  return os.str();
}

GridDomain parse_header(std::istream& in, const char* magic, int expected_dimension) {
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("missing header");
  }
  std::istringstream hs(line);
  std::string tag;
  std::string key;
  int dims = 0;
  hs >> tag >> key >> dims;
  if (!hs || tag != magic || key != "dims") {
    throw IoError("malformed header: '" + line + "'");
  }
  if (dims != expected_dimension) {
    throw IoError("file holds a " + std::to_string(dims) + "-dimensional grid, expected " +
                  std::to_string(expected_dimension));
  }
  if (dims != 2) {
    throw IoError("only two-dimensional grids are supported");
  }
  long long nx = 0;
  long long ny = 0;
  double dx = 0.0;
  std::string bc_name;
  hs >> nx >> ny >> key;
  if (!hs || key != "spacing") {
    throw IoError("malformed header: '" + line + "'");
  }
  hs >> dx >> key >> bc_name;
  if (!hs || key != "boundary" || (bc_name != "neumann" && bc_name != "periodic")) {
    throw IoError("malformed header: '" + line + "'");
  }
  if (nx <= 0 || ny <= 0 || nx > kMaxCells / ny) {
    throw IoError("grid dimensions overflow");
  }
  try {
    return GridDomain(nx, ny, dx, bc_name == "periodic" ? Boundary::Periodic : Boundary::Neumann);
  } catch (const DomainError& e) {
    throw IoError(std::string("invalid grid in header: ") + e.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  return in;
}

}  // namespace

void save_mask(const BinarySet& s, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& d = s.domain();
  out << format_header(kMaskMagic, d);
  std::string row(static_cast<std::size_t>(d.nx()), '0');
  for (Index iy = 0; iy < d.ny(); ++iy) {
    for (Index ix = 0; ix < d.nx(); ++ix) {
      row[static_cast<std::size_t>(ix)] = s(iy, ix) ? '1' : '0';
    }
    out << row << '\n';
  }
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

BinarySet load_mask(const std::filesystem::path& path, int expected_dimension) {
  auto in = open_in(path);
  const GridDomain d = parse_header(in, kMaskMagic, expected_dimension);
  MaskArray mask(d.ny(), d.nx());
  std::string row;
  for (Index iy = 0; iy < d.ny(); ++iy) {
    if (!std::getline(in, row)) {
      throw IoError("truncated mask file: expected " + std::to_string(d.ny()) + " rows");
    }
    if (static_cast<Index>(row.size()) != d.nx()) {
      throw IoError("mask row " + std::to_string(iy) + " has wrong length");
    }
    for (Index ix = 0; ix < d.nx(); ++ix) {
      const char c = row[static_cast<std::size_t>(ix)];
      if (c != '0' && c != '1') {
        throw IoError("mask row " + std::to_string(iy) + " contains a non-bit character");
      }
      mask(iy, ix) = c == '1' ? 1 : 0;
    }
  }
  return BinarySet(d, std::move(mask));
}

void save_pgm(const BinarySet& s, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  const auto& d = s.domain();
  out << "P5\n" << d.nx() << ' ' << d.ny() << "\n255\n";
  std::vector<char> bytes(static_cast<std::size_t>(d.cells()));
  for (Index i = 0; i < d.cells(); ++i) {
    bytes[static_cast<std::size_t>(i)] = static_cast<char>(s.at(i) ? 255 : 0);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

void save_field_raw(const ScalarField& f, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << format_header(kFieldMagic, f.domain());
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.values().size() * sizeof(double)));
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

ScalarField load_field_raw(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  const GridDomain d = parse_header(in, kFieldMagic, 2);
  Field<double> values(d.ny(), d.nx());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double))) {
    throw IoError("truncated field file '" + path.string() + "'");
  }
  return ScalarField(d, std::move(values));
}

}  // namespace flatflow
