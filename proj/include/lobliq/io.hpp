// io.hpp - CSV exports, binary grid container, run manifests.
#ifndef LOBLIQ_IO_HPP
#define LOBLIQ_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lobliq/grid.hpp"
#include "lobliq/pathsim.hpp"

namespace lobliq {

/// Long-format path CSV: path_id,time,x,s_b,delta,mid,ask,w,nu,eta.
std::string paths_to_csv(const std::vector<PathRecord>& paths);
void write_paths_csv(const std::string& file, const std::vector<PathRecord>& paths);

/// 2-D slice of a field with two axes fixed; header comments carry the fixed
/// coordinates. Axis selectors: 0=t, 1=x, 2=s, 3=d.
std::string field_slice_csv(const Field4& f, const std::string& value_name, int fixed_axis_a,
                            int index_a, int fixed_axis_b, int index_b);

/// Binary container for a solved grid (value + policy). Little-endian layout:
///   magic "LOBGRID1" | u32 schema_version=1 | u32 reserved |
///   u32 n_t,n_x,n_s,n_d | f64 control_cap |
///   f64 t[n_t], x[n_x], s[n_s], d[n_d] |
///   f64 u[n], nu[n], eta[n]   (row-major over t,x,s,d)
void write_grid_container(const std::string& file, const ValueGrid& value,
                          const PolicyGrid& policy);

struct GridContainer {
    ValueGrid value;
    PolicyGrid policy;
};
GridContainer read_grid_container(const std::string& file);

/// FNV-1a content hash, hex-encoded; used to fingerprint scenario files in
/// run manifests.
uint64_t fnv1a_hash(const std::string& bytes);
std::string hash_hex(uint64_t h);

void write_text_file(const std::string& file, const std::string& content);
std::string read_text_file(const std::string& file);

}  // namespace lobliq

#endif
