#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/corpus.hpp"
#include "satire/embedding.hpp"

namespace satire::topics {

using json = nlohmann::json;
using Matrix = std::vector<std::vector<double>>;

inline constexpr int kOutlierTopic = -1;

struct Keyword {
    std::string term;
    double weight = 0.0;

    bool operator==(const Keyword&) const = default;
};

struct Topic {
    int id = kOutlierTopic;
    std::vector<std::string> member_ids;
    std::vector<Keyword> keywords;  // descending weight
};

struct CandidateWordSet {
    std::vector<std::string> topic_words;
    std::vector<std::string> random_words;
    std::uint64_t seed = 0;
};

const std::unordered_set<std::string>& stopwords();

/// Bundled list of common English words used for the random-word control.
const std::vector<std::string>& common_words();

/// Lowercases, splits on anything that is not a letter or digit (non-ASCII
/// bytes count as letters), and drops stopwords, tokens shorter than three
/// characters, and tokens without a letter.
std::vector<std::string> tokenize_terms(std::string_view text);

/// Mean-centered projection onto the top `target_dims` principal directions.
/// Each direction is signed so its largest-magnitude loading is positive.
/// Requires target_dims < dimension and at least target_dims + 1 rows
/// (InvalidArgument otherwise). All-identical input yields zeros.
Matrix reduce(const Matrix& vectors, int target_dims);

/// 1 - cos(a, b); two zero vectors are at distance 0, one zero vector at 1.
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Average-linkage agglomerative clustering under cosine distance. Merging
/// stops once the closest pair is at or beyond `distance_threshold`. Clusters
/// are numbered by their first member; clusters smaller than
/// `min_cluster_size` become kOutlierTopic.
std::vector<int> cluster(const Matrix& reduced, int min_cluster_size, double distance_threshold = 0.5);

/// Class-based TF-IDF over pre-tokenized class documents:
/// weight(t, c) = tf(t, c) * log(1 + A / f(t)), with f(t) the frequency of t
/// over all classes and A the mean token count per class. Returns the top_n
/// terms per class, weight descending, ties by term.
std::vector<std::vector<Keyword>> class_tfidf(const std::vector<std::vector<std::string>>& class_tokens,
                                              int top_n);

/// Fills `keywords` for every non-outlier topic from the member articles'
/// title and body text.
void extract_keywords(std::vector<Topic>& topics, const std::vector<corpus::Article>& corpus, int top_n);

/// Round-robin over topics by keyword rank for the topic words, then a seeded
/// draw without replacement from `wordlist` (minus the topic words).
CandidateWordSet select_candidates(const std::vector<Topic>& topics, const std::vector<std::string>& wordlist,
                                   int n_topic = 25, int n_random = 25, std::uint64_t seed = 0);

struct TopicConfig {
    int target_dims = 5;
    int min_cluster_size = 2;
    double distance_threshold = 0.5;
    int top_n = 10;
    int n_topic = 25;
    int n_random = 25;
    std::uint64_t seed = 0;
};

struct KeywordPoint {
    std::string term;
    int topic_id = 0;
    double weight = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct TopicModel {
    std::vector<Topic> topics;  // id order; the outlier topic, if any, last
    CandidateWordSet candidates;
    std::vector<KeywordPoint> keyword_map;
    std::string model_id;
};

/// reduce -> cluster -> keywords -> candidates, plus 2-D keyword coordinates
/// (term-frequency-weighted mean of member articles' 2-D projections).
/// `embeddings` must be parallel to `articles`.
TopicModel mine_topics(const std::vector<corpus::Article>& articles, const std::vector<EmbeddingVector>& embeddings,
                       const TopicConfig& config);

json to_json(const TopicModel& model);
TopicModel topic_model_from_json(const json& j);

}  // namespace satire::topics
