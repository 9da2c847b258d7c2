// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "strokefield/errors.hpp"
#include "strokefield/scene_io.hpp"

// Line format:
//   strokefield v1
//   region <k_delta> <delta_mode> <constant_delta> <composition> <tau> <delta_min> <delta_max>
//   background <r> <g> <b>
//   segments <K>
//   strokes <N>
//   <kind> | <geometry> | <r> <g> <b> | <density>      (N lines)
//   errorgrid none  |  errorgrid <nx> <ny> <nz> | <lo xyz> <hi xyz>   followed by nx*ny*nz values
//   end
// Primitive geometry is translation, rotation, scale, basic; spline geometry is
// the control points then r_a, r_b. Reals are hex floats.

namespace strokefield {

namespace {

constexpr const char* kHeader = "strokefield v1";

void put(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  out += buf;
}

void put_list(std::string& out, std::initializer_list<double> vs) {
  bool first = true;
  for (double v : vs) {
    if (!first) out += ' ';
    first = false;
    put(out, v);
  }
}

class Lines {
 public:
  explicit Lines(std::string_view text) : text_(text) {}

  std::string next(const char* what) {
    while (pos_ < text_.size()) {
      const std::size_t e = text_.find('\n', pos_);
      const std::size_t end = e == std::string_view::npos ? text_.size() : e;
      std::string line(text_.substr(pos_, end - pos_));
      pos_ = end + 1;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return line;
    }
    throw TruncatedFileError(std::string("checkpoint truncated: expected ") + what);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

double parse_real(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw IoError("checkpoint: bad number '" + tok + "'");
  return v;
}

std::vector<double> reals(const std::string& s) {
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_real(tok));
  return out;
}

std::vector<std::string> split_bar(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t bar = line.find('|', start);
    parts.push_back(line.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return parts;
}

std::string trimmed(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<double> expect_count(const std::string& s, std::size_t n, const char* what) {
  auto v = reals(s);
  if (v.size() != n)
    throw IoError(std::string("checkpoint: ") + what + " expects " + std::to_string(n) + " values, got " +
                  std::to_string(v.size()));
  return v;
}

}  // namespace

std::string serialize_checkpoint(const StrokeField& field, const ErrorGrid* grid) {
  std::string out = kHeader;
  out += '\n';
  const RegionConfig& r = field.region;
  out += "region ";
  put(out, r.k_delta);
  out += ' ';
  out += delta_mode_name(r.delta_mode);
  out += ' ';
  put(out, r.constant_delta);
  out += ' ';
  out += composition_name(r.composition);
  out += ' ';
  put_list(out, {r.tau, r.delta_min, r.delta_max});
  out += "\nbackground ";
  put_list(out, {field.background.x, field.background.y, field.background.z});
  out += "\nsegments " + std::to_string(field.spline_segments);
  out += "\nstrokes " + std::to_string(field.strokes.size()) + '\n';
  for (const Stroke& s : field.strokes) {
    out += StrokeKind::of(s).name();
    out += " | ";
    if (const auto* p = std::get_if<PrimitiveStroke>(&s)) {
      const Transform& t = p->transform;
      put_list(out, {t.translation.x, t.translation.y, t.translation.z, t.rotation.x, t.rotation.y, t.rotation.z,
                     t.scale.x, t.scale.y, t.scale.z});
      for (double b : p->basic) {
        out += ' ';
        put(out, b);
      }
    } else {
      const auto& sp = std::get<SplineStroke>(s);
      for (const Vec3& c : sp.control_points) {
        put_list(out, {c.x, c.y, c.z});
        out += ' ';
      }
      put_list(out, {sp.r_a, sp.r_b});
    }
    const Rgb& c = stroke_color(s);
    out += " | ";
    put_list(out, {c.x, c.y, c.z});
    out += " | ";
    put(out, stroke_density(s));
    out += '\n';
  }
  if (!grid) {
    out += "errorgrid none\n";
  } else {
    const auto& res = grid->resolution();
    const Aabb& b = grid->bbox();
    out += "errorgrid " + std::to_string(res[0]) + ' ' + std::to_string(res[1]) + ' ' + std::to_string(res[2]) + " | ";
    put_list(out, {b.lo.x, b.lo.y, b.lo.z, b.hi.x, b.hi.y, b.hi.z});
    out += '\n';
    const auto& raw = grid->raw();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      put(out, raw[i]);
      out += (i % 8 == 7 || i + 1 == raw.size()) ? '\n' : ' ';
    }
  }
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  Lines lines(text);
  const std::string header = trimmed(lines.next("header"));
  if (header != kHeader) {
    if (header.rfind("strokefield ", 0) == 0)
      throw VersionMismatchError("unsupported checkpoint version: " + header.substr(12));
    throw VersionMismatchError("not a strokefield checkpoint");
  }
  {
    const std::size_t last = text.find_last_not_of(" \t\r\n");
    const std::size_t bol = text.find_last_of('\n', last);
    if (bol == std::string_view::npos || trimmed(std::string(text.substr(bol + 1, last - bol))) != "end")
      throw TruncatedFileError("checkpoint truncated: missing end marker");
  }
  Checkpoint cp;
  StrokeField& f = cp.field;
  {
    std::istringstream in(lines.next("region"));
    std::string tag, k, mode, cd, comp, tau, dmin, dmax;
    if (!(in >> tag >> k >> mode >> cd >> comp >> tau >> dmin >> dmax) || tag != "region")
      throw IoError("checkpoint: malformed region line");
    f.region.k_delta = parse_real(k);
    const auto dm = delta_mode_from_name(mode);
    if (!dm) throw UnknownKindError("unknown delta mode: " + mode);
    f.region.delta_mode = *dm;
    f.region.constant_delta = parse_real(cd);
    const auto cm = composition_from_name(comp);
    if (!cm) throw UnknownKindError("unknown composition: " + comp);
    f.region.composition = *cm;
    f.region.tau = parse_real(tau);
    f.region.delta_min = parse_real(dmin);
    f.region.delta_max = parse_real(dmax);
  }
  {
    const std::string line = lines.next("background");
    if (line.rfind("background ", 0) != 0) throw IoError("checkpoint: expected background line");
    const auto v = expect_count(line.substr(11), 3, "background");
    f.background = {v[0], v[1], v[2]};
  }
  std::size_t n = 0;
  {
    std::istringstream seg(lines.next("segments"));
    std::string tag;
    if (!(seg >> tag >> f.spline_segments) || tag != "segments") throw IoError("checkpoint: malformed segments line");
    std::istringstream st(lines.next("strokes"));
    if (!(st >> tag >> n) || tag != "strokes") throw IoError("checkpoint: malformed strokes line");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto parts = split_bar(lines.next("stroke record"));
    if (parts.size() != 4) throw IoError("checkpoint: stroke record needs 4 fields");
    const std::string tag = trimmed(parts[0]);
    const StrokeKind kind = StrokeKind::from_name(tag);
    const auto geom = reals(parts[1]);
    const auto col = expect_count(parts[2], 3, "color");
    const auto den = expect_count(parts[3], 1, "density");
    if (kind.spline) {
      SplineStroke s;
      s.kind = kind.curve;
      const std::size_t nc = static_cast<std::size_t>(control_count(kind.curve));
      if (geom.size() != nc * 3 + 2) throw ParameterShapeError("checkpoint: wrong parameter count for " + tag);
      for (std::size_t c = 0; c < nc; ++c) s.control_points.push_back({geom[c * 3], geom[c * 3 + 1], geom[c * 3 + 2]});
      s.r_a = geom[nc * 3];
      s.r_b = geom[nc * 3 + 1];
      s.color = {col[0], col[1], col[2]};
      s.density = den[0];
      f.strokes.emplace_back(std::move(s));
    } else {
      PrimitiveStroke p;
      p.kind = kind.primitive;
      const std::size_t nb = static_cast<std::size_t>(traits(p.kind).basic_count);
      if (geom.size() != 9 + nb) throw ParameterShapeError("checkpoint: wrong parameter count for " + tag);
      p.transform.translation = {geom[0], geom[1], geom[2]};
      p.transform.rotation = {geom[3], geom[4], geom[5]};
      p.transform.scale = {geom[6], geom[7], geom[8]};
      p.basic.assign(geom.begin() + 9, geom.end());
      p.color = {col[0], col[1], col[2]};
      p.density = den[0];
      f.strokes.emplace_back(std::move(p));
    }
  }
  {
    const std::string line = trimmed(lines.next("errorgrid"));
    if (line != "errorgrid none") {
      if (line.rfind("errorgrid ", 0) != 0) throw IoError("checkpoint: expected errorgrid line");
      const auto parts = split_bar(line.substr(10));
      if (parts.size() != 2) throw IoError("checkpoint: malformed errorgrid line");
      std::istringstream rs(parts[0]);
      std::array<int, 3> res{};
      if (!(rs >> res[0] >> res[1] >> res[2]) || res[0] < 1 || res[1] < 1 || res[2] < 1)
        throw IoError("checkpoint: bad error grid resolution");
      const auto b = expect_count(parts[1], 6, "errorgrid bbox");
      ErrorGrid grid(res, Aabb{{b[0], b[1], b[2]}, {b[3], b[4], b[5]}}, 0.0);
      std::size_t filled = 0;
      auto& raw = grid.raw();
      while (filled < raw.size()) {
        for (double v : reals(lines.next("error grid values"))) {
          if (filled == raw.size()) throw IoError("checkpoint: too many error grid values");
          raw[filled++] = v;
        }
      }
      cp.grid = std::move(grid);
    }
  }
  if (trimmed(lines.next("end marker")) != "end") throw IoError("checkpoint: missing end marker");
  return cp;
}

void save_stroke_field(const StrokeField& field, const ErrorGrid* grid, const std::filesystem::path& path) {
  write_text_file(path, serialize_checkpoint(field, grid));
}

Checkpoint load_stroke_field(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

}  // namespace strokefield
