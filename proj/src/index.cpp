#include "irf/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"
#include "irf/error.hpp"

namespace irf {

namespace {

constexpr char kMagic[8] = {'I', 'R', 'F', 'I', 'N', 'D', 'E', 'X'};
constexpr std::uint32_t kVersion = 1;

enum class Section : std::uint32_t { passages = 1, terms = 2, postings = 3 };

void write_section(detail::BinaryWriter& w, Section tag, const std::string& payload) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tag));
    w.put<std::uint64_t>(payload.size());
    w.put_raw(payload.data(), payload.size());
}

std::string read_section(detail::BinaryReader& r, Section expected) {
    auto tag = r.get<std::uint32_t>();
    if (tag != static_cast<std::uint32_t>(expected)) {
        r.fail("unexpected section tag " + std::to_string(tag));
    }
    auto size = r.get<std::uint64_t>();
    std::string payload(size, '\0');
    r.get_raw(payload.data(), size);
    return payload;
}

}  // namespace

Index Index::build(const PassageCollection& collection) {
    if (collection.empty()) {
        throw InputError("cannot index an empty collection");
    }
    Index idx;
    std::map<std::string, TermId, std::less<>> dictionary;
    for (const auto& p : collection.passages()) {
        for (const auto& t : p.tokens) {
            dictionary.emplace(t, 0);
        }
    }
    idx.terms_.reserve(dictionary.size());
    for (auto& [term, id] : dictionary) {
        id = static_cast<TermId>(idx.terms_.size());
        idx.terms_.push_back(term);
    }
    idx.postings_.resize(idx.terms_.size());
    idx.passage_ids_.reserve(collection.size());
    idx.doc_length_.reserve(collection.size());
    std::vector<std::uint32_t> counts(idx.terms_.size(), 0);
    std::vector<TermId> touched;
    for (PassageRef ref = 0; ref < collection.size(); ++ref) {
        const auto& p = collection[ref];
        idx.passage_ids_.push_back(p.passage_id);
        idx.doc_length_.push_back(static_cast<std::uint32_t>(p.tokens.size()));
        touched.clear();
        for (const auto& t : p.tokens) {
            TermId id = dictionary.find(t)->second;
            if (counts[id]++ == 0) {
                touched.push_back(id);
            }
        }
        std::sort(touched.begin(), touched.end());
        for (TermId id : touched) {
            idx.postings_[id].push_back(Posting{ref, counts[id]});
            counts[id] = 0;
        }
    }
    idx.finish();
    return idx;
}

void Index::finish() {
    const std::size_t n = passage_ids_.size();
    total_tokens_ = std::accumulate(doc_length_.begin(), doc_length_.end(), std::uint64_t{0});

    std::vector<PassageRef> order(n);
    std::iota(order.begin(), order.end(), PassageRef{0});
    std::sort(order.begin(), order.end(), [&](PassageRef a, PassageRef b) { return passage_ids_[a] < passage_ids_[b]; });
    id_order_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        id_order_[order[i]] = static_cast<std::uint32_t>(i);
    }

    passage_lookup_.clear();
    passage_lookup_.reserve(n);
    for (PassageRef ref = 0; ref < n; ++ref) {
        passage_lookup_.emplace(passage_ids_[ref], ref);
    }
    term_lookup_.clear();
    term_lookup_.reserve(terms_.size());
    for (TermId id = 0; id < terms_.size(); ++id) {
        term_lookup_.emplace(terms_[id], id);
    }

    cf_.assign(terms_.size(), 0);
    df_.assign(terms_.size(), 0);
    forward_.assign(n, {});
    for (TermId id = 0; id < terms_.size(); ++id) {
        df_[id] = static_cast<std::uint32_t>(postings_[id].size());
        for (const auto& post : postings_[id]) {
            cf_[id] += post.tf;
            forward_[post.passage].push_back(TermCount{id, post.tf});
        }
    }
}

double Index::average_length() const {
    return static_cast<double>(total_tokens_) / static_cast<double>(passage_count());
}

std::optional<TermId> Index::term_id(std::string_view term) const {
    auto it = term_lookup_.find(std::string(term));
    if (it == term_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<PassageRef> Index::find_passage(std::string_view passage_id) const {
    auto it = passage_lookup_.find(std::string(passage_id));
    if (it == passage_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double Index::collection_prob(TermId id) const {
    if (total_tokens_ == 0) {
        return 0.0;
    }
    return static_cast<double>(cf_[id]) / static_cast<double>(total_tokens_);
}

double Index::collection_prob(std::string_view term) const {
    auto id = term_id(term);
    return id ? collection_prob(*id) : 0.0;
}

double Index::idf(TermId id) const {
    if (df_[id] == 0) {
        return 0.0;
    }
    return std::log(static_cast<double>(passage_count()) / static_cast<double>(df_[id]));
}

double Index::idf(std::string_view term) const {
    auto id = term_id(term);
    return id ? idf(*id) : 0.0;
}

void Index::audit() const {
    auto fail = [](const std::string& what) { throw std::logic_error("index audit: " + what); };
    if (doc_length_.size() != passage_ids_.size() || forward_.size() != passage_ids_.size()) {
        fail("per-passage arrays disagree in size");
    }
    std::uint64_t total = 0;
    for (auto len : doc_length_) {
        total += len;
    }
    if (total != total_tokens_) {
        fail("total_tokens != sum of passage lengths");
    }
    std::vector<std::uint64_t> length_from_postings(passage_ids_.size(), 0);
    for (TermId id = 0; id < terms_.size(); ++id) {
        std::uint64_t cf = 0;
        PassageRef prev = 0;
        for (std::size_t i = 0; i < postings_[id].size(); ++i) {
            const auto& post = postings_[id][i];
            if (post.tf == 0) {
                fail("zero term frequency for " + terms_[id]);
            }
            if (i > 0 && post.passage <= prev) {
                fail("postings not strictly ordered for " + terms_[id]);
            }
            prev = post.passage;
            cf += post.tf;
            length_from_postings[post.passage] += post.tf;
        }
        if (cf != cf_[id]) {
            fail("collection frequency mismatch for " + terms_[id]);
        }
        if (df_[id] != postings_[id].size()) {
            fail("document frequency mismatch for " + terms_[id]);
        }
    }
    for (PassageRef ref = 0; ref < passage_ids_.size(); ++ref) {
        if (length_from_postings[ref] != doc_length_[ref]) {
            fail("passage length mismatch for " + passage_ids_[ref]);
        }
    }
}

void Index::write(std::ostream& out) const {
    detail::BinaryWriter w(out);
    w.put_raw(kMagic, sizeof(kMagic));
    w.put<std::uint32_t>(kVersion);

    std::ostringstream passages;
    {
        detail::BinaryWriter s(passages);
        s.put<std::uint32_t>(static_cast<std::uint32_t>(passage_ids_.size()));
        for (std::size_t i = 0; i < passage_ids_.size(); ++i) {
            s.put_string(passage_ids_[i]);
            s.put<std::uint32_t>(doc_length_[i]);
        }
    }
    write_section(w, Section::passages, passages.str());

    std::ostringstream terms;
    {
        detail::BinaryWriter s(terms);
        s.put<std::uint32_t>(static_cast<std::uint32_t>(terms_.size()));
        for (TermId id = 0; id < terms_.size(); ++id) {
            s.put_string(terms_[id]);
            s.put<std::uint64_t>(cf_[id]);
            s.put<std::uint32_t>(df_[id]);
        }
    }
    write_section(w, Section::terms, terms.str());

    std::ostringstream postings;
    {
        detail::BinaryWriter s(postings);
        for (const auto& list : postings_) {
            s.put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
            for (const auto& post : list) {
                s.put<std::uint32_t>(post.passage);
                s.put<std::uint32_t>(post.tf);
            }
        }
    }
    write_section(w, Section::postings, postings.str());
}

Index Index::read(std::istream& in, const std::string& source) {
    detail::BinaryReader r(in, source);
    char magic[sizeof(kMagic)];
    r.get_raw(magic, sizeof(magic));
    if (!std::equal(magic, magic + sizeof(magic), kMagic)) {
        r.fail("not an index snapshot");
    }
    auto version = r.get<std::uint32_t>();
    if (version != kVersion) {
        r.fail("unsupported index snapshot version " + std::to_string(version));
    }
    Index idx;

    std::istringstream passages(read_section(r, Section::passages));
    detail::BinaryReader pr(passages, source);
    auto n = pr.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
        idx.passage_ids_.push_back(pr.get_string());
        idx.doc_length_.push_back(pr.get<std::uint32_t>());
    }

    std::istringstream terms(read_section(r, Section::terms));
    detail::BinaryReader tr(terms, source);
    auto t = tr.get<std::uint32_t>();
    std::vector<std::uint64_t> cf(t);
    std::vector<std::uint32_t> df(t);
    for (std::uint32_t i = 0; i < t; ++i) {
        idx.terms_.push_back(tr.get_string());
        cf[i] = tr.get<std::uint64_t>();
        df[i] = tr.get<std::uint32_t>();
    }

    std::istringstream postings(read_section(r, Section::postings));
    detail::BinaryReader por(postings, source);
    idx.postings_.resize(t);
    for (std::uint32_t i = 0; i < t; ++i) {
        auto len = por.get<std::uint32_t>();
        idx.postings_[i].reserve(len);
        for (std::uint32_t k = 0; k < len; ++k) {
            Posting post{};
            post.passage = por.get<std::uint32_t>();
            post.tf = por.get<std::uint32_t>();
            if (post.passage >= n) {
                r.fail("posting refers to passage " + std::to_string(post.passage) + " out of range");
            }
            idx.postings_[i].push_back(post);
        }
    }
    idx.finish();
    if (idx.cf_ != cf || idx.df_ != df) {
        r.fail("stored term statistics disagree with postings");
    }
    try {
        idx.audit();
    } catch (const std::logic_error& e) {
        r.fail(e.what());
    }
    return idx;
}

void Index::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    write(out);
}

Index Index::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return read(in, path.string());
}

bool Index::operator==(const Index& other) const {
    return passage_ids_ == other.passage_ids_ && doc_length_ == other.doc_length_ && terms_ == other.terms_ &&
           postings_ == other.postings_;
}

TermVector tfidf_vector(const Passage& passage, const Index& index) {
    std::map<std::string, std::uint32_t, std::less<>> tf;
    for (const auto& t : passage.tokens) {
        ++tf[t];
    }
    TermVector v;
    for (const auto& [term, count] : tf) {
        auto id = index.term_id(term);
        if (!id || index.document_frequency(*id) == 0) {
            continue;
        }
        v.weights.emplace(term, count * index.idf(*id));
    }
    return v;
}

TermVector tfidf_vector(PassageRef ref, const Index& index) {
    TermVector v;
    for (const auto& tc : index.passage_terms(ref)) {
        v.weights.emplace(index.term(tc.term), tc.tf * index.idf(tc.term));
    }
    return v;
}

double collection_prob(const Index& index, std::string_view term) {
    return index.collection_prob(term);
}

}  // namespace irf
