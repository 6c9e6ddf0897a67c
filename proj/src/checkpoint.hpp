#ifndef UGCPL_CHECKPOINT_HPP
#define UGCPL_CHECKPOINT_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace ugcpl {

// Checkpoint container format:
//   magic "UGCP", u32 format version, then per entry:
//   u32 name length, name bytes, u8 dtype tag (0 = f32), u32 rank,
//   u32 dims[rank], little-endian f32 payload.
// Entries run to end of file. Round-trips are bit-exact.

constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& entries);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

// entries whose name starts with `prefix`, with the prefix stripped
std::map<std::string, Tensor> filter_prefix(const std::map<std::string, Tensor>& all,
                                            const std::string& prefix);

}  // namespace ugcpl

#endif  // UGCPL_CHECKPOINT_HPP
