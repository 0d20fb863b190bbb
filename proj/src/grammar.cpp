#include "csg/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "csg/errors.hpp"

namespace csg {

const char* kind_name(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::Circle: return "circle";
        case PrimitiveKind::Square: return "square";
        case PrimitiveKind::Triangle: return "triangle";
        case PrimitiveKind::Sphere: return "sphere";
        case PrimitiveKind::Cube: return "cube";
        case PrimitiveKind::Cylinder: return "cylinder";
    }
    return "?";
}

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Union: return "union";
        case OpKind::Intersect: return "intersect";
        case OpKind::Subtract: return "subtract";
    }
    return "?";
}

std::vector<int> Grid::values() const {
    std::vector<int> out;
    for (int v = start; v <= stop; v += step) out.push_back(v);
    return out;
}

bool Grid::contains(double v) const {
    if (v != std::floor(v)) return false;
    int i = int(v);
    return i >= start && i <= stop && (i - start) % step == 0;
}

GrammarConfig GrammarConfig::defaults2d() {
    GrammarConfig cfg;
    cfg.dim = Dim::D2;
    cfg.primitive_kinds = {PrimitiveKind::Circle, PrimitiveKind::Square,
                           PrimitiveKind::Triangle};
    cfg.op_kinds = {OpKind::Union, OpKind::Intersect, OpKind::Subtract};
    return cfg;
}

GrammarConfig GrammarConfig::defaults3d() {
    GrammarConfig cfg = defaults2d();
    cfg.dim = Dim::D3;
    cfg.primitive_kinds = {PrimitiveKind::Sphere, PrimitiveKind::Cube,
                           PrimitiveKind::Cylinder};
    return cfg;
}

namespace {

bool kind_is_3d(PrimitiveKind k) {
    return k == PrimitiveKind::Sphere || k == PrimitiveKind::Cube ||
           k == PrimitiveKind::Cylinder;
}

void check_grid(const char* what, const Grid& g, int extent) {
    if (g.step <= 0) throw std::invalid_argument(std::string(what) + ": step must be positive");
    if (g.start <= 0 || g.stop > extent || g.start > g.stop)
        throw std::invalid_argument(std::string(what) +
                                    ": values must be positive and within the canvas");
}

}  // namespace

void GrammarConfig::check() const {
    if (canvas_extent <= 0) throw std::invalid_argument("canvas_extent must be positive");
    check_grid("location grid", location, canvas_extent);
    check_grid("radius grid", radius, canvas_extent);
    if (is3d()) check_grid("height grid", height, canvas_extent);
    if (primitive_kinds.empty()) throw std::invalid_argument("primitive_kinds is empty");
    if (op_kinds.empty()) throw std::invalid_argument("op_kinds is empty");
    if (max_length < 3) throw std::invalid_argument("max_length must be at least 3");
    for (PrimitiveKind k : primitive_kinds)
        if (kind_is_3d(k) != is3d())
            throw std::invalid_argument(std::string("primitive kind ") + kind_name(k) +
                                        " does not match grammar dimensionality");
}

Instruction Instruction::primitive2d(PrimitiveKind k, double x, double y, double r) {
    Instruction i;
    i.tag = Tag::Primitive;
    i.prim = k;
    i.x = x;
    i.y = y;
    i.r = r;
    return i;
}

Instruction Instruction::primitive3d(PrimitiveKind k, double x, double y, double z,
                                     double r, double h) {
    Instruction i;
    i.tag = Tag::Primitive;
    i.prim = k;
    i.x = x;
    i.y = y;
    i.z = z;
    i.r = r;
    i.h = h;
    return i;
}

Instruction Instruction::boolean(OpKind k) {
    Instruction i;
    i.tag = Tag::Op;
    i.op = k;
    return i;
}

Instruction Instruction::stop() {
    Instruction i;
    i.tag = Tag::Stop;
    return i;
}

bool Instruction::is3d() const { return is_primitive() && kind_is_3d(prim); }

std::array<double, 6> primitive_bbox(const Instruction& instr) {
    const double x = instr.x, y = instr.y, z = instr.z, r = instr.r, h = instr.h;
    switch (instr.prim) {
        case PrimitiveKind::Circle:
            return {x - r, y - r, 0, x + r, y + r, 0};
        case PrimitiveKind::Square: {
            const double half = r / std::sqrt(2.0);
            return {x - half, y - half, 0, x + half, y + half, 0};
        }
        case PrimitiveKind::Triangle: {
            const double half = r * std::sqrt(3.0) / 2.0;
            return {x - half, y - r, 0, x + half, y + r / 2.0, 0};
        }
        case PrimitiveKind::Sphere:
            return {x - r, y - r, z - r, x + r, y + r, z + r};
        case PrimitiveKind::Cube: {
            const double half = r / 2.0;
            return {x - half, y - half, z - half, x + half, y + half, z + half};
        }
        case PrimitiveKind::Cylinder:
            return {x - r, y - r, z - h / 2.0, x + r, y + r, z + h / 2.0};
    }
    return {0, 0, 0, 0, 0, 0};
}

std::string ValidityReport::describe() const {
    switch (failure) {
        case Failure::None: return "ok";
        case Failure::StackUnderflow:
            return "stack underflow at instruction " + std::to_string(position);
        case Failure::NonSingletonFinal:
            return "final stack holds " + std::to_string(final_count) + " shapes";
        case Failure::TooLong: return "program exceeds maximum length";
        case Failure::Empty: return "empty program";
    }
    return "?";
}

ValidityReport validate(const Program& p, const GrammarConfig& cfg) {
    ValidityReport rep;
    if (p.empty()) {
        rep.failure = ValidityReport::Failure::Empty;
        return rep;
    }
    if (int(p.length()) > cfg.max_length) {
        rep.failure = ValidityReport::Failure::TooLong;
        return rep;
    }
    int depth = 0;
    for (std::size_t i = 0; i < p.instructions.size(); ++i) {
        const Instruction& instr = p.instructions[i];
        if (instr.is_primitive()) {
            ++depth;
        } else if (instr.is_op()) {
            if (depth < 2) {
                rep.failure = ValidityReport::Failure::StackUnderflow;
                rep.position = int(i);
                return rep;
            }
            --depth;
        }
    }
    if (depth != 1) {
        rep.failure = ValidityReport::Failure::NonSingletonFinal;
        rep.final_count = depth;
        return rep;
    }
    rep.valid = true;
    return rep;
}

namespace {

std::string fmt_param(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e9) {
        return std::to_string(long(v));
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string format_instruction(const Instruction& instr) {
    switch (instr.tag) {
        case Instruction::Tag::Stop: return "stop";
        case Instruction::Tag::Op: return op_name(instr.op);
        case Instruction::Tag::Primitive: {
            std::string s = kind_name(instr.prim);
            s += "(" + fmt_param(instr.x) + "," + fmt_param(instr.y);
            if (instr.is3d()) s += "," + fmt_param(instr.z);
            s += "," + fmt_param(instr.r);
            if (instr.prim == PrimitiveKind::Cylinder) s += "," + fmt_param(instr.h);
            s += ")";
            return s;
        }
    }
    return "?";
}

std::string format_program(const Program& p) {
    std::string out;
    for (const Instruction& instr : p.instructions) {
        if (!out.empty()) out += " ";
        out += format_instruction(instr);
    }
    if (p.terminated) {
        if (!out.empty()) out += " ";
        out += "stop";
    }
    return out;
}

namespace {

const std::pair<const char*, PrimitiveKind> kKindTable[] = {
    {"circle", PrimitiveKind::Circle},   {"square", PrimitiveKind::Square},
    {"triangle", PrimitiveKind::Triangle}, {"sphere", PrimitiveKind::Sphere},
    {"cube", PrimitiveKind::Cube},       {"cylinder", PrimitiveKind::Cylinder},
};

const std::pair<const char*, OpKind> kOpTable[] = {
    {"union", OpKind::Union},
    {"intersect", OpKind::Intersect},
    {"subtract", OpKind::Subtract},
};

double parse_number(const std::string& tok, const std::string& whole,
                    bool allow_continuous) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw SyntaxError("bad number '" + tok + "' in token '" + whole + "'");
    }
    if (pos != tok.size())
        throw SyntaxError("bad number '" + tok + "' in token '" + whole + "'");
    if (!allow_continuous && v != std::floor(v))
        throw SyntaxError("non-integer parameter '" + tok + "' in token '" + whole + "'");
    if (!std::isfinite(v)) throw SyntaxError("non-finite parameter in '" + whole + "'");
    return v;
}

Instruction parse_primitive_token(const std::string& tok, const GrammarConfig& cfg,
                                  bool allow_continuous) {
    const std::size_t open = tok.find('(');
    if (open == std::string::npos || tok.back() != ')')
        throw SyntaxError("malformed token '" + tok + "'");
    const std::string name = tok.substr(0, open);
    PrimitiveKind kind;
    bool found = false;
    for (auto& [n, k] : kKindTable)
        if (name == n) {
            kind = k;
            found = true;
        }
    if (!found) throw SyntaxError("unknown primitive '" + name + "'");
    if (kind_is_3d(kind) != cfg.is3d())
        throw SyntaxError("primitive '" + name + "' does not match grammar dimensionality");
    if (std::find(cfg.primitive_kinds.begin(), cfg.primitive_kinds.end(), kind) ==
        cfg.primitive_kinds.end())
        throw RangeError("primitive kind '" + name + "' not enabled in this grammar");

    std::vector<double> params;
    std::string body = tok.substr(open + 1, tok.size() - open - 2);
    std::stringstream ss(body);
    std::string field;
    while (std::getline(ss, field, ','))
        params.push_back(parse_number(field, tok, allow_continuous));

    const std::size_t want = cfg.is3d() ? (kind == PrimitiveKind::Cylinder ? 5 : 4) : 3;
    if (params.size() != want)
        throw SyntaxError("token '" + tok + "' expects " + std::to_string(want) +
                          " parameters, got " + std::to_string(params.size()));

    Instruction instr =
        cfg.is3d() ? Instruction::primitive3d(kind, params[0], params[1], params[2],
                                              params[3], params.size() == 5 ? params[4] : 0)
                   : Instruction::primitive2d(kind, params[0], params[1], params[2]);

    bool on_grid = cfg.location.contains(instr.x) && cfg.location.contains(instr.y) &&
                   cfg.radius.contains(instr.r);
    if (cfg.is3d()) on_grid = on_grid && cfg.location.contains(instr.z);
    if (kind == PrimitiveKind::Cylinder) on_grid = on_grid && cfg.height.contains(instr.h);
    if (!on_grid) {
        if (!allow_continuous)
            throw RangeError("parameter off the configured grid in '" + tok + "'");
        instr.continuous = true;
    }
    return instr;
}

}  // namespace

Program parse_program(const std::string& text, const GrammarConfig& cfg,
                      bool allow_continuous) {
    Program p;
    std::stringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        if (p.terminated)
            throw SyntaxError("token '" + tok + "' after stop");
        if (tok == "stop") {
            p.terminated = true;
            continue;
        }
        bool is_op = false;
        for (auto& [n, k] : kOpTable)
            if (tok == n) {
                if (std::find(cfg.op_kinds.begin(), cfg.op_kinds.end(), k) ==
                    cfg.op_kinds.end())
                    throw RangeError("operation '" + tok + "' not enabled in this grammar");
                p.instructions.push_back(Instruction::boolean(k));
                is_op = true;
            }
        if (is_op) continue;
        p.instructions.push_back(parse_primitive_token(tok, cfg, allow_continuous));
    }
    return p;
}

Vocabulary::Vocabulary(std::vector<Instruction> entries) : entries_(std::move(entries)) {
    for (int i = 0; i < int(entries_.size()); ++i)
        index_.emplace(format_instruction(entries_[std::size_t(i)]), i);
}

int Vocabulary::id_of(const Instruction& instr) const {
    auto it = index_.find(format_instruction(instr));
    return it == index_.end() ? -1 : it->second;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const Instruction& instr : entries_) {
        for (char c : format_instruction(instr)) {
            h ^= std::uint8_t(c);
            h *= 1099511628211ull;
        }
        h ^= std::uint8_t('\n');
        h *= 1099511628211ull;
    }
    return h;
}

Vocabulary build_vocabulary(const GrammarConfig& cfg) {
    cfg.check();
    std::vector<Instruction> prims;
    const auto locs = cfg.location.values();
    const auto radii = cfg.radius.values();
    const auto heights = cfg.height.values();

    for (PrimitiveKind kind : cfg.primitive_kinds) {
        for (int x : locs)
            for (int y : locs) {
                if (!cfg.is3d()) {
                    for (int r : radii)
                        prims.push_back(Instruction::primitive2d(kind, x, y, r));
                } else {
                    for (int z : locs)
                        for (int r : radii) {
                            if (kind == PrimitiveKind::Cylinder) {
                                for (int h : heights)
                                    prims.push_back(
                                        Instruction::primitive3d(kind, x, y, z, r, h));
                            } else {
                                prims.push_back(Instruction::primitive3d(kind, x, y, z, r));
                            }
                        }
                }
            }
    }

    if (cfg.containment_filter) {
        const double lo = 0.0, hi = double(cfg.canvas_extent);
        std::erase_if(prims, [&](const Instruction& instr) {
            const auto bb = primitive_bbox(instr);
            bool ok = bb[0] >= lo && bb[1] >= lo && bb[3] <= hi && bb[4] <= hi;
            if (instr.is3d()) ok = ok && bb[2] >= lo && bb[5] <= hi;
            return !ok;
        });
    }

    std::sort(prims.begin(), prims.end(), [](const Instruction& a, const Instruction& b) {
        return std::make_tuple(std::string(kind_name(a.prim)), a.x, a.y, a.z, a.r, a.h) <
               std::make_tuple(std::string(kind_name(b.prim)), b.x, b.y, b.z, b.r, b.h);
    });

    for (OpKind op : {OpKind::Union, OpKind::Intersect, OpKind::Subtract})
        if (std::find(cfg.op_kinds.begin(), cfg.op_kinds.end(), op) != cfg.op_kinds.end())
            prims.push_back(Instruction::boolean(op));
    prims.push_back(Instruction::stop());
    return Vocabulary(std::move(prims));
}

namespace {

std::unordered_map<std::string, long> read_kv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::unordered_map<std::string, long> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::stringstream ss(line);
        std::string key, eq;
        long value;
        if (!(ss >> key)) continue;
        if (!(ss >> eq >> value) || eq != "=")
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 'key = int'");
        kv[key] = value;
    }
    return kv;
}

}  // namespace

GrammarConfig load_grammar(const std::string& path) {
    auto kv = read_kv(path);
    auto take = [&](const std::string& key, long fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        long v = it->second;
        kv.erase(it);
        return v;
    };

    const long dim = take("dim", 2);
    if (dim != 2 && dim != 3) throw IoError(path + ": dim must be 2 or 3");
    GrammarConfig cfg = dim == 2 ? GrammarConfig::defaults2d() : GrammarConfig::defaults3d();
    cfg.canvas_extent = int(take("canvas", cfg.canvas_extent));
    cfg.location = {int(take("loc_start", cfg.location.start)),
                    int(take("loc_step", cfg.location.step)),
                    int(take("loc_end", cfg.location.stop))};
    cfg.radius = {int(take("rad_start", cfg.radius.start)),
                  int(take("rad_step", cfg.radius.step)),
                  int(take("rad_end", cfg.radius.stop))};
    cfg.height = {int(take("height_start", cfg.height.start)),
                  int(take("height_step", cfg.height.step)),
                  int(take("height_end", cfg.height.stop))};
    cfg.max_length = int(take("max_length", cfg.max_length));
    cfg.containment_filter = take("containment", cfg.containment_filter ? 1 : 0) != 0;

    std::vector<PrimitiveKind> kinds;
    for (PrimitiveKind k : cfg.primitive_kinds)
        if (take(std::string("prim_") + kind_name(k), 1) != 0) kinds.push_back(k);
    cfg.primitive_kinds = kinds;

    std::vector<OpKind> ops;
    for (OpKind k : {OpKind::Union, OpKind::Intersect, OpKind::Subtract})
        if (take(std::string("op_") + op_name(k), 1) != 0) ops.push_back(k);
    cfg.op_kinds = ops;

    if (!kv.empty()) throw IoError(path + ": unknown key '" + kv.begin()->first + "'");
    cfg.check();
    return cfg;
}

void save_grammar(const std::string& path, const GrammarConfig& cfg) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "dim = " << (cfg.is3d() ? 3 : 2) << "\n";
    os << "canvas = " << cfg.canvas_extent << "\n";
    os << "loc_start = " << cfg.location.start << "\n";
    os << "loc_step = " << cfg.location.step << "\n";
    os << "loc_end = " << cfg.location.stop << "\n";
    os << "rad_start = " << cfg.radius.start << "\n";
    os << "rad_step = " << cfg.radius.step << "\n";
    os << "rad_end = " << cfg.radius.stop << "\n";
    if (cfg.is3d()) {
        os << "height_start = " << cfg.height.start << "\n";
        os << "height_step = " << cfg.height.step << "\n";
        os << "height_end = " << cfg.height.stop << "\n";
    }
    os << "max_length = " << cfg.max_length << "\n";
    os << "containment = " << (cfg.containment_filter ? 1 : 0) << "\n";
    const auto all2d = {PrimitiveKind::Circle, PrimitiveKind::Square, PrimitiveKind::Triangle};
    const auto all3d = {PrimitiveKind::Sphere, PrimitiveKind::Cube, PrimitiveKind::Cylinder};
    for (PrimitiveKind k : (cfg.is3d() ? all3d : all2d)) {
        const bool on = std::find(cfg.primitive_kinds.begin(), cfg.primitive_kinds.end(),
                                  k) != cfg.primitive_kinds.end();
        os << "prim_" << kind_name(k) << " = " << (on ? 1 : 0) << "\n";
    }
    for (OpKind k : {OpKind::Union, OpKind::Intersect, OpKind::Subtract}) {
        const bool on =
            std::find(cfg.op_kinds.begin(), cfg.op_kinds.end(), k) != cfg.op_kinds.end();
        os << "op_" << op_name(k) << " = " << (on ? 1 : 0) << "\n";
    }
}

}  // namespace csg
