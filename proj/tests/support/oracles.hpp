#pragma once

#include <string>
#include <vector>

#include "webgraph/graph.hpp"
#include "webgraph/rng.hpp"

namespace oracle {

/// Path segments and query values (bare parameters by name), written
/// independently of the production URL parser.
std::vector<std::string> url_tokens(const std::string& url);

/// Stored value under a transform, computed with the reference digests.
std::string transform(webgraph::MatchTransform t, const std::string& value);

/// Double loop over (value, transform, URL) triples followed by a pairwise
/// pass over the requests that carry the same stored value.
std::vector<webgraph::Edge> match_values(const std::vector<webgraph::StoredValue>& values,
                                         const std::vector<webgraph::RequestUrl>& urls,
                                         std::size_t min_value_len);

/// H(parent) - weighted H(children) computed from counts with log2.
double info_gain(const std::vector<double>& values, const std::vector<int>& labels,
                 double threshold);

/// A tracker page with at most ten graph nodes: a tag script, an identifier
/// cookie, a beacon and optionally a redirect sync and a first-party image.
std::string small_trace(webgraph::Rng& rng, std::size_t index);

std::string fixture_path(const std::string& name);

webgraph::PageGraph load_fixture_graph(std::size_t min_value_len = 5);

}  // namespace oracle
