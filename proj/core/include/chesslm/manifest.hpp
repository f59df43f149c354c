#pragma once

#include <map>
#include <string>
#include <vector>

namespace chesslm {

// One manifest per artifact-producing command: what ran, over which inputs
// (by content hash), with which seed, and what it wrote.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config_hashes;
    std::map<std::string, std::string> dataset_hashes;
    uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> output_paths;

    std::string to_json() const;
    void write(const std::string& path) const;
};

std::string file_hash_hex(const std::string& path);
std::string now_iso8601();

}  // namespace chesslm
