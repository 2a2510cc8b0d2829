#include "satire/topics.hpp"

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "satire/error.hpp"
#include "satire/util/random.hpp"
#include "satire/util/text.hpp"

namespace satire::data {
extern const char* const kStopwords;
extern const char* const kCommonWords;
}  // namespace satire::data

namespace satire::topics {

namespace {

std::vector<std::string> lines_of(const char* text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = [] {
        auto list = lines_of(data::kStopwords);
        return std::unordered_set<std::string>(list.begin(), list.end());
    }();
    return words;
}

const std::vector<std::string>& common_words() {
    static const std::vector<std::string> words = lines_of(data::kCommonWords);
    return words;
}

std::vector<std::string> tokenize_terms(std::string_view text) {
    std::vector<std::string> out;
    const auto& stop = stopwords();
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t b = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i == b) continue;
        auto token = ascii_lower(text.substr(b, i - b));
        if (utf8_length(token) < 3 || stop.count(token)) continue;
        bool has_letter = std::any_of(token.begin(), token.end(), [](char c) {
            return std::isalpha(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
        });
        if (has_letter) out.push_back(std::move(token));
    }
    return out;
}

Matrix reduce(const Matrix& vectors, int target_dims) {
    if (vectors.empty()) throw InvalidArgument("reduce needs at least one vector");
    const auto n = static_cast<Eigen::Index>(vectors.size());
    const auto d = static_cast<Eigen::Index>(vectors.front().size());
    if (target_dims < 1 || target_dims >= d) {
        throw InvalidArgument("target_dims must lie in [1, " + std::to_string(d - 1) + "]");
    }
    if (n < target_dims + 1) {
        throw InvalidArgument("reduce to " + std::to_string(target_dims) + " dims needs at least " +
                              std::to_string(target_dims + 1) + " vectors");
    }
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(vectors[static_cast<std::size_t>(r)].size()) != d) {
            throw InvalidArgument("vectors differ in length");
        }
        for (Eigen::Index c = 0; c < d; ++c) x(r, c) = vectors[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    x.rowwise() -= x.colwise().mean();

    Matrix out(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(target_dims), 0.0));
    if (x.cwiseAbs().maxCoeff() <= 1e-12) {
        spdlog::warn("reduce: all points identical, returning zero projections");
        return out;
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    Eigen::MatrixXd components = svd.matrixV().leftCols(target_dims);
    for (Eigen::Index k = 0; k < components.cols(); ++k) {
        Eigen::Index arg = 0;
        components.col(k).cwiseAbs().maxCoeff(&arg);
        if (components(arg, k) < 0) components.col(k) *= -1.0;
    }
    Eigen::MatrixXd projected = x * components;
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < target_dims; ++c) {
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = projected(r, c);
        }
    }
    return out;
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const bool za = na <= 1e-24, zb = nb <= 1e-24;
    if (za && zb) return 0.0;
    if (za || zb) return 1.0;
    double cos = dot / (std::sqrt(na) * std::sqrt(nb));
    return 1.0 - std::clamp(cos, -1.0, 1.0);
}

std::vector<int> cluster(const Matrix& reduced, int min_cluster_size, double distance_threshold) {
    const std::size_t n = reduced.size();
    if (n == 0) return {};
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = cosine_distance(reduced[i], reduced[j]);
    }
    // Active clusters keyed by slot; Lance-Williams update for average linkage.
    std::vector<std::vector<std::size_t>> members(n);
    std::vector<bool> active(n, true);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};
    for (;;) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (active[j] && dist[i][j] < best - 1e-15) {
                    best = dist[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        if (!(best < distance_threshold)) break;
        const double ni = static_cast<double>(members[bi].size());
        const double nj = static_cast<double>(members[bj].size());
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) continue;
            dist[bi][k] = dist[k][bi] = (ni * dist[bi][k] + nj * dist[bj][k]) / (ni + nj);
        }
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        active[bj] = false;
    }

    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        std::sort(members[i].begin(), members[i].end());
        groups.push_back(members[i]);
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<int> labels(n, kOutlierTopic);
    int next = 0;
    for (const auto& g : groups) {
        if (static_cast<int>(g.size()) < min_cluster_size) continue;
        for (auto m : g) labels[m] = next;
        ++next;
    }
    return labels;
}

std::vector<std::vector<Keyword>> class_tfidf(const std::vector<std::vector<std::string>>& class_tokens, int top_n) {
    std::vector<std::map<std::string, double>> tf(class_tokens.size());
    std::map<std::string, double> total;
    double all_tokens = 0;
    for (std::size_t c = 0; c < class_tokens.size(); ++c) {
        for (const auto& t : class_tokens[c]) {
            tf[c][t] += 1;
            total[t] += 1;
        }
        all_tokens += static_cast<double>(class_tokens[c].size());
    }
    const double avg = class_tokens.empty() ? 0.0 : all_tokens / static_cast<double>(class_tokens.size());

    std::vector<std::vector<Keyword>> out(class_tokens.size());
    for (std::size_t c = 0; c < class_tokens.size(); ++c) {
        if (tf[c].empty()) {
            spdlog::warn("class {} is empty after stopword removal", c);
            continue;
        }
        auto& kws = out[c];
        for (const auto& [term, count] : tf[c]) kws.push_back({term, count * std::log(1.0 + avg / total[term])});
        std::sort(kws.begin(), kws.end(), [](const Keyword& a, const Keyword& b) {
            return a.weight != b.weight ? a.weight > b.weight : a.term < b.term;
        });
        if (top_n >= 0 && kws.size() > static_cast<std::size_t>(top_n)) kws.resize(static_cast<std::size_t>(top_n));
    }
    return out;
}

void extract_keywords(std::vector<Topic>& topics, const std::vector<corpus::Article>& corpus, int top_n) {
    std::unordered_map<std::string, const corpus::Article*> by_id;
    for (const auto& a : corpus) by_id[a.id] = &a;
    std::vector<std::size_t> slots;
    std::vector<std::vector<std::string>> classes;
    for (std::size_t t = 0; t < topics.size(); ++t) {
        if (topics[t].id == kOutlierTopic) continue;
        std::vector<std::string> tokens;
        for (const auto& id : topics[t].member_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) throw InvalidArgument("topic member not in corpus: " + id);
            auto doc = tokenize_terms(embedding_text(*it->second));
            tokens.insert(tokens.end(), doc.begin(), doc.end());
        }
        slots.push_back(t);
        classes.push_back(std::move(tokens));
    }
    auto weighted = class_tfidf(classes, top_n);
    for (std::size_t k = 0; k < slots.size(); ++k) topics[slots[k]].keywords = std::move(weighted[k]);
}

CandidateWordSet select_candidates(const std::vector<Topic>& topics, const std::vector<std::string>& wordlist,
                                   int n_topic, int n_random, std::uint64_t seed) {
    CandidateWordSet set;
    set.seed = seed;
    auto single_lower = [](const std::string& w) {
        return !w.empty() && std::none_of(w.begin(), w.end(), [](char c) {
            return std::isspace(static_cast<unsigned char>(c)) || (c >= 'A' && c <= 'Z');
        });
    };

    std::set<std::string> chosen;
    std::size_t max_rank = 0;
    for (const auto& t : topics) {
        if (t.id != kOutlierTopic) max_rank = std::max(max_rank, t.keywords.size());
    }
    for (std::size_t rank = 0; rank < max_rank && static_cast<int>(set.topic_words.size()) < n_topic; ++rank) {
        for (const auto& t : topics) {
            if (t.id == kOutlierTopic || rank >= t.keywords.size()) continue;
            const auto& term = t.keywords[rank].term;
            if (!single_lower(term) || !chosen.insert(term).second) continue;
            set.topic_words.push_back(term);
            if (static_cast<int>(set.topic_words.size()) == n_topic) break;
        }
    }
    if (static_cast<int>(set.topic_words.size()) < n_topic) {
        throw CandidateError("need " + std::to_string(n_topic) + " distinct topic keywords, found " +
                             std::to_string(set.topic_words.size()) + " (short by " +
                             std::to_string(n_topic - static_cast<int>(set.topic_words.size())) + ")");
    }

    if (wordlist.size() < 1000) {
        throw CandidateError("random-word list needs at least 1000 entries, has " + std::to_string(wordlist.size()));
    }
    std::vector<std::string> pool;
    std::set<std::string> seen;
    for (const auto& w : wordlist) {
        if (single_lower(w) && !chosen.count(w) && seen.insert(w).second) pool.push_back(w);
    }
    if (static_cast<int>(pool.size()) < n_random) {
        throw CandidateError("not enough words left for the random control");
    }
    std::mt19937_64 rng(seed);
    for (int k = 0; k < n_random; ++k) {
        auto j = static_cast<std::size_t>(k) + uniform_below(rng, pool.size() - static_cast<std::size_t>(k));
        std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
        set.random_words.push_back(pool[static_cast<std::size_t>(k)]);
    }
    return set;
}

TopicModel mine_topics(const std::vector<corpus::Article>& articles, const std::vector<EmbeddingVector>& embeddings,
                       const TopicConfig& config) {
    if (articles.size() != embeddings.size()) throw InvalidArgument("articles and embeddings differ in count");
    if (articles.size() < 2) throw InvalidArgument("topic mining needs at least two articles");
    Matrix vectors;
    for (const auto& e : embeddings) vectors.push_back(e.values);
    const int dims = static_cast<int>(vectors.front().size());
    int target = std::min({config.target_dims, static_cast<int>(articles.size()) - 1, dims - 1});
    if (target != config.target_dims) {
        spdlog::warn("reducing to {} dims instead of {} (corpus too small)", target, config.target_dims);
    }
    auto reduced = reduce(vectors, target);
    auto labels = cluster(reduced, config.min_cluster_size, config.distance_threshold);

    TopicModel model;
    model.model_id = embeddings.front().model_id;
    int max_label = *std::max_element(labels.begin(), labels.end());
    model.topics.resize(static_cast<std::size_t>(max_label + 1));
    for (int t = 0; t <= max_label; ++t) model.topics[static_cast<std::size_t>(t)].id = t;
    Topic outliers;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kOutlierTopic) outliers.member_ids.push_back(articles[i].id);
        else model.topics[static_cast<std::size_t>(labels[i])].member_ids.push_back(articles[i].id);
    }
    extract_keywords(model.topics, articles, config.top_n);
    model.candidates = select_candidates(model.topics, common_words(), config.n_topic, config.n_random, config.seed);

    auto plane = reduce(vectors, std::min(2, std::min(dims - 1, static_cast<int>(articles.size()) - 1)));
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < articles.size(); ++i) row_of[articles[i].id] = i;
    for (const auto& topic : model.topics) {
        std::vector<std::map<std::string, int>> member_counts;
        for (const auto& id : topic.member_ids) {
            std::map<std::string, int> counts;
            for (const auto& tok : tokenize_terms(embedding_text(articles[row_of[id]]))) ++counts[tok];
            member_counts.push_back(std::move(counts));
        }
        for (const auto& kw : topic.keywords) {
            double wx = 0, wy = 0, wsum = 0;
            for (std::size_t m = 0; m < topic.member_ids.size(); ++m) {
                auto it = member_counts[m].find(kw.term);
                if (it == member_counts[m].end()) continue;
                const auto& p = plane[row_of[topic.member_ids[m]]];
                wx += it->second * p[0];
                wy += it->second * (p.size() > 1 ? p[1] : 0.0);
                wsum += it->second;
            }
            model.keyword_map.push_back({kw.term, topic.id, kw.weight, wsum > 0 ? wx / wsum : 0.0,
                                         wsum > 0 ? wy / wsum : 0.0});
        }
    }
    if (!outliers.member_ids.empty()) model.topics.push_back(std::move(outliers));
    return model;
}

json to_json(const TopicModel& model) {
    json topics = json::array();
    for (const auto& t : model.topics) {
        json kws = json::array();
        for (const auto& k : t.keywords) kws.push_back(json::array({k.term, k.weight}));
        topics.push_back({{"id", t.id}, {"member_ids", t.member_ids}, {"keywords", kws}});
    }
    json points = json::array();
    for (const auto& p : model.keyword_map) {
        points.push_back({{"term", p.term}, {"topic_id", p.topic_id}, {"weight", p.weight}, {"x", p.x}, {"y", p.y}});
    }
    return {{"model_id", model.model_id},
            {"topics", topics},
            {"candidates",
             {{"topic_words", model.candidates.topic_words},
              {"random_words", model.candidates.random_words},
              {"seed", model.candidates.seed}}},
            {"keyword_map", points}};
}

TopicModel topic_model_from_json(const json& j) {
    try {
        TopicModel model;
        model.model_id = j.value("model_id", "");
        for (const auto& t : j.at("topics")) {
            Topic topic;
            topic.id = t.at("id").get<int>();
            topic.member_ids = t.at("member_ids").get<std::vector<std::string>>();
            for (const auto& k : t.at("keywords")) topic.keywords.push_back({k.at(0).get<std::string>(), k.at(1).get<double>()});
            model.topics.push_back(std::move(topic));
        }
        const auto& c = j.at("candidates");
        model.candidates.topic_words = c.at("topic_words").get<std::vector<std::string>>();
        model.candidates.random_words = c.at("random_words").get<std::vector<std::string>>();
        model.candidates.seed = c.at("seed").get<std::uint64_t>();
        for (const auto& p : j.value("keyword_map", json::array())) {
            model.keyword_map.push_back({p.at("term").get<std::string>(), p.at("topic_id").get<int>(),
                                         p.at("weight").get<double>(), p.at("x").get<double>(), p.at("y").get<double>()});
        }
        return model;
    } catch (const json::exception& e) {
        throw StoreError(std::string("malformed topics document: ") + e.what());
    }
}

}  // namespace satire::topics
