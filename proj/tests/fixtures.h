#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hallufix/corpus.h"
#include "hallufix/ner.h"
#include "hallufix/random.h"

namespace hallufix::testing {

// Templated news-style examples with typed entities. `clean` carries the
// gold summary; `planted` is the same example with one summary entity
// swapped for a same-type entity that never occurs in the document.
struct PlantedCorpus {
  std::vector<Example> clean;
  std::vector<Example> planted;
  std::vector<std::string> planted_surface;   // entity put into the summary
  std::vector<std::string> original_surface;  // entity it replaced
};

PlantedCorpus make_planted_corpus(std::size_t n, std::uint64_t seed,
                                  const std::string& id_prefix);

// Every name the corpus generator can emit, as gazetteer lines.
std::string planted_gazetteer_tsv();

// A document/summary pair with hand-placed mentions, for candidate
// generation. Summary mentions listed in `hallucinated` do not occur in the
// document.
struct CandidateInstance {
  Example example;
  std::vector<EntityMention> source_mentions;
  std::vector<EntityMention> summary_mentions;
  std::vector<EntityMention> hallucinated;
};

CandidateInstance random_candidate_instance(Rng& rng, std::size_t max_hallucinated,
                                            std::size_t max_pool);

// Texts of every legal candidate, built left to right from assignments:
// the original, each single substitution, and (when every hallucinated
// mention has a replacement) each full assignment.
std::set<std::string> brute_force_candidate_texts(const CandidateInstance& instance);

Example reelection_example();
std::string reelection_gazetteer_tsv();

}  // namespace hallufix::testing
