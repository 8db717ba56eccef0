#include "lobliq/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lobliq {

namespace {

// Shortest round-trip representation keeps CSV byte-stable across runs.
void append_num(std::string& out, double v) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

std::string paths_to_csv(const std::vector<PathRecord>& paths) {
    std::string out = "path_id,time,x,s_b,delta,mid,ask,w,nu,eta\n";
    for (size_t p = 0; p < paths.size(); ++p) {
        const PathRecord& rec = paths[p];
        for (size_t k = 0; k < rec.times.size(); ++k) {
            const MarketState& s = rec.states[k];
            out += std::to_string(p);
            out += ',';
            append_num(out, rec.times[k]);
            out += ',';
            append_num(out, s.x);
            out += ',';
            append_num(out, s.s_b);
            out += ',';
            append_num(out, s.delta);
            out += ',';
            append_num(out, mid_price(s));
            out += ',';
            append_num(out, ask_price(s));
            out += ',';
            append_num(out, s.w);
            out += ',';
            append_num(out, rec.controls[k].nu);
            out += ',';
            append_num(out, rec.controls[k].eta);
            out += '\n';
        }
    }
    return out;
}

void write_paths_csv(const std::string& file, const std::vector<PathRecord>& paths) {
    write_text_file(file, paths_to_csv(paths));
}

namespace {

const Axis& axis_of(const Field4& f, int a) {
    switch (a) {
        case 0: return f.t;
        case 1: return f.x;
        case 2: return f.s;
        case 3: return f.d;
    }
    throw std::invalid_argument("axis selector must be 0..3");
}

const char* axis_name(int a) {
    switch (a) {
        case 0: return "t";
        case 1: return "x";
        case 2: return "s_b";
        case 3: return "delta";
    }
    return "?";
}

}  // namespace

std::string field_slice_csv(const Field4& f, const std::string& value_name, int fixed_axis_a,
                            int index_a, int fixed_axis_b, int index_b) {
    if (fixed_axis_a == fixed_axis_b)
        throw std::invalid_argument("field_slice_csv: fixed axes must differ");
    int free_axes[2], n_free = 0;
    for (int a = 0; a < 4; ++a)
        if (a != fixed_axis_a && a != fixed_axis_b) free_axes[n_free++] = a;

    std::string out;
    {
        std::ostringstream os;
        os << "# " << axis_name(fixed_axis_a) << "=" << axis_of(f, fixed_axis_a)[index_a]
           << " " << axis_name(fixed_axis_b) << "=" << axis_of(f, fixed_axis_b)[index_b]
           << "\n"
           << axis_name(free_axes[0]) << "," << axis_name(free_axes[1]) << "," << value_name
           << "\n";
        out = os.str();
    }

    const Axis& a0 = axis_of(f, free_axes[0]);
    const Axis& a1 = axis_of(f, free_axes[1]);
    int idx[4];
    idx[fixed_axis_a] = index_a;
    idx[fixed_axis_b] = index_b;
    for (int p = 0; p < a0.size(); ++p) {
        for (int q = 0; q < a1.size(); ++q) {
            idx[free_axes[0]] = p;
            idx[free_axes[1]] = q;
            append_num(out, a0[p]);
            out += ',';
            append_num(out, a1[q]);
            out += ',';
            append_num(out, f.at(idx[0], idx[1], idx[2], idx[3]));
            out += '\n';
        }
    }
    return out;
}

namespace {

constexpr char kMagic[8] = {'L', 'O', 'B', 'G', 'R', 'I', 'D', '1'};
constexpr uint32_t kSchemaVersion = 1;

void put_u32(std::ofstream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ofstream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64s(std::ofstream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}
uint32_t get_u32(std::ifstream& is) {
    uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
double get_f64(std::ifstream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::vector<double> get_f64s(std::ifstream& is, size_t n) {
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

}  // namespace

void write_grid_container(const std::string& file, const ValueGrid& value,
                          const PolicyGrid& policy) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + file);
    os.write(kMagic, 8);
    put_u32(os, kSchemaVersion);
    put_u32(os, 0);
    put_u32(os, static_cast<uint32_t>(value.u.t.size()));
    put_u32(os, static_cast<uint32_t>(value.u.x.size()));
    put_u32(os, static_cast<uint32_t>(value.u.s.size()));
    put_u32(os, static_cast<uint32_t>(value.u.d.size()));
    put_u32(os, static_cast<uint32_t>(value.spec.n_nu));
    put_u32(os, static_cast<uint32_t>(value.spec.n_eta));
    put_u32(os, static_cast<uint32_t>(value.spec.time_substeps));
    put_u32(os, 0);
    put_f64(os, value.spec.x_first);
    put_f64(os, policy.control_cap);
    put_f64s(os, value.u.t.nodes());
    put_f64s(os, value.u.x.nodes());
    put_f64s(os, value.u.s.nodes());
    put_f64s(os, value.u.d.nodes());
    put_f64s(os, value.u.data);
    put_f64s(os, policy.nu_star.data);
    put_f64s(os, policy.eta_star.data);
    if (!os) throw std::runtime_error("write failed: " + file);
}

GridContainer read_grid_container(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + file);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a grid container: " + file);
    const uint32_t version = get_u32(is);
    if (version != kSchemaVersion)
        throw std::runtime_error("unsupported grid container version " + std::to_string(version));
    get_u32(is);  // reserved
    const uint32_t n_t = get_u32(is), n_x = get_u32(is), n_s = get_u32(is), n_d = get_u32(is);
    const uint32_t n_nu = get_u32(is), n_eta = get_u32(is), substeps = get_u32(is);
    get_u32(is);  // padding
    const double x_first = get_f64(is);
    const double cap = get_f64(is);

    GridContainer out;
    Field4 proto;
    proto.t = Axis(get_f64s(is, n_t));
    proto.x = Axis(get_f64s(is, n_x));
    proto.s = Axis(get_f64s(is, n_s));
    proto.d = Axis(get_f64s(is, n_d));
    const size_t n = proto.size();

    out.value.u = proto;
    out.value.u.data = get_f64s(is, n);
    out.policy.nu_star = proto;
    out.policy.nu_star.data = get_f64s(is, n);
    out.policy.eta_star = proto;
    out.policy.eta_star.data = get_f64s(is, n);
    out.policy.control_cap = cap;
    if (!is) throw std::runtime_error("truncated grid container: " + file);

    GridSpec spec;
    spec.n_t = static_cast<int>(n_t);
    spec.n_x = static_cast<int>(n_x);
    spec.n_s = static_cast<int>(n_s);
    spec.n_d = static_cast<int>(n_d);
    spec.x_max = proto.x.hi();
    spec.s_min = proto.s.lo();
    spec.s_max = proto.s.hi();
    spec.d_max = proto.d.hi();
    spec.n_nu = static_cast<int>(n_nu);
    spec.n_eta = static_cast<int>(n_eta);
    spec.time_substeps = static_cast<int>(substeps);
    spec.x_first = x_first;
    out.value.spec = spec;
    out.policy.spec = spec;
    return out;
}

uint64_t fnv1a_hash(const std::string& bytes) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text_file(const std::string& file, const std::string& content) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + file);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("write failed: " + file);
}

std::string read_text_file(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + file);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace lobliq
