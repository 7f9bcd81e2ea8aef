#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgat/graph.hpp"
#include "hgat/tensor.hpp"

namespace hgat {

struct TfidfConfig {
    bool lowercase = true;
    std::size_t max_features = 5000;
    std::size_t min_df = 1;
    bool operator==(const TfidfConfig&) const = default;
};

// Tokens are maximal runs of [0-9A-Za-z] plus bytes >= 0x80, so multi-byte
// UTF-8 sequences survive as word characters.
std::vector<std::string> tokenize(const std::string& text, bool lowercase);

struct Vocabulary {
    std::vector<std::string> terms;  // unique, lexicographically sorted
    std::vector<std::size_t> doc_freq;
    std::size_t corpus_size = 0;
    std::vector<double> idf;  // ln((1+N)/(1+df)) + 1

    int index_of(const std::string& term) const;
    std::uint64_t fingerprint() const;
    bool operator==(const Vocabulary&) const = default;
};

Vocabulary build_vocabulary(const std::vector<std::string>& texts, const TfidfConfig& config);

// count(term) * idf, then L2-normalized; fully out-of-vocabulary text encodes
// to the zero vector.
std::vector<double> encode_document(const std::string& text, const Vocabulary& vocab,
                                    const TfidfConfig& config);

struct FeatureSet {
    std::vector<Vocabulary> vocabs;  // per node type
    std::vector<Tensor> features;    // per node type, [nodes x vocab size]

    std::vector<std::size_t> dims() const;
};

FeatureSet encode_graph(const HinGraph& graph, const TfidfConfig& config);

// Cache file: magic HGFC, version byte, text metadata block (config + per-type
// vocabulary listing), then per-type row-major little-endian 32-bit floats.
void save_feature_cache(const std::filesystem::path& path, const FeatureSet& set,
                        const TfidfConfig& config, const std::vector<std::string>& type_names);
FeatureSet load_feature_cache(const std::filesystem::path& path, TfidfConfig& config_out,
                              std::vector<std::string>& type_names_out);

}  // namespace hgat
