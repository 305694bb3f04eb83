#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "webgraph/eventlog.hpp"
#include "webgraph/labels.hpp"

namespace webgraph {

struct CountRange {
  std::size_t min = 0;
  std::size_t max = 0;
  friend bool operator==(const CountRange&, const CountRange&) = default;
};

/// Knobs of the synthetic trace generator. Every range is sampled per page
/// (tracker intensity per tracker).
struct CorpusSpec {
  std::size_t n_pages = 100;
  std::uint64_t seed = 1;
  CountRange benign_resources{8, 30};      // first-party images, styles, scripts
  CountRange benign_third_parties{1, 4};   // CDN / widget providers
  CountRange trackers{1, 4};               // tracker domains per page
  CountRange beacons_per_tracker{1, 3};    // identifier-carrying requests per tracker
  CountRange redirect_sync_pairs{0, 2};    // cookie sync through a 3xx redirect
  CountRange query_sync_flows{0, 2};       // cookie read by one tracker, sent to another
  CountRange local_storage_writers{0, 2};
  CountRange benign_lookalikes{1, 4};      // benign URLs carrying ad keywords
  double encoded_sync_fraction = 0.3;      // share of syncs sent base64/MD5 encoded
  std::size_t id_length = 16;

  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

/// Throws DataError when a range is inverted or n_pages is zero.
void validate_spec(const CorpusSpec& spec);
nlohmann::json corpus_spec_to_json(const CorpusSpec& spec);
/// Missing fields keep their defaults. Throws DataError.
CorpusSpec corpus_spec_from_json(const nlohmann::json& j);

struct GroundTruth {
  std::string page_id;
  std::map<std::string, Label> labels;  // request_id -> label
  std::vector<std::string> tracker_domains;  // sorted
};

struct GeneratedPage {
  PageTrace trace;
  GroundTruth truth;
};

/// Page ids are "page_<index>". Deterministic per (spec.seed, page_index).
GeneratedPage generate_page(const CorpusSpec& spec, std::size_t page_index);

/// The tracker and benign third-party domain pools the generator draws from.
const std::vector<std::string>& tracker_domain_pool();
const std::vector<std::string>& benign_domain_pool();

/// `||domain^` for every domain, sorted and deduplicated.
std::string rules_for_domains(std::vector<std::string> domains);

struct CorpusSummary {
  std::size_t pages = 0;
  std::size_t requests = 0;
  std::size_t ats_requests = 0;
  std::vector<std::string> tracker_domains;
};

/// Writes manifest.json, pages/page_<i>.jsonl, labels.csv and rules.txt under
/// `dir`. Output bytes do not depend on `jobs`.
CorpusSummary generate_corpus(const CorpusSpec& spec, const std::filesystem::path& dir,
                              std::size_t jobs = 1);

struct CorpusPageEntry {
  std::string page_id;
  std::string file;  // relative to the corpus directory
};

/// Page entries listed in `dir`/manifest.json, in manifest order.
std::vector<CorpusPageEntry> read_manifest(const std::filesystem::path& dir);

/// Ground-truth labels.csv: page_id -> request_id -> label.
std::map<std::string, std::map<std::string, Label>> read_ground_truth(
    const std::filesystem::path& labels_csv);

}  // namespace webgraph
