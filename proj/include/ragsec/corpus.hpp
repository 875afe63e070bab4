//
// Copyright 2026 The ragsec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef RAGSEC_CORPUS_HPP_
#define RAGSEC_CORPUS_HPP_

#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ragsec/error.hpp"

namespace ragsec {

// Half-open character range [start, end) into Document::text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct Document {
  std::string id;
  std::string text;
  bool sensitive = false;
  std::vector<Span> sensitive_spans;
  std::string source_tag = "public";

  friend bool operator==(const Document&, const Document&) = default;
};

inline void ValidateDocument(const Document& doc) {
  if (doc.id.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "document id must be non-empty");
  }
  for (const Span& span : doc.sensitive_spans) {
    if (!(span.start < span.end && span.end <= doc.text.size())) {
      throw Error(ErrorCode::kInvalidSpan,
                  doc.id + ":[" + std::to_string(span.start) + "," +
                      std::to_string(span.end) + ")");
    }
  }
}

// Immutable set of documents keyed (and iterated) by ascending id. All
// modifications return a new value, so instances can be shared freely across
// threads.
class KnowledgeBase {
 public:
  using Map = std::map<std::string, Document>;

  KnowledgeBase() = default;

  explicit KnowledgeBase(std::vector<Document> docs) {
    for (Document& doc : docs) {
      ValidateDocument(doc);
      std::string id = doc.id;
      auto [it, inserted] = docs_.emplace(id, std::move(doc));
      if (!inserted) throw Error(ErrorCode::kDuplicateId, id);
    }
  }

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  bool contains(const std::string& id) const { return docs_.count(id) != 0; }

  const Document& at(const std::string& id) const {
    auto it = docs_.find(id);
    if (it == docs_.end()) throw Error(ErrorCode::kUnknownId, id);
    return it->second;
  }

  const Map& docs() const { return docs_; }
  Map::const_iterator begin() const { return docs_.begin(); }
  Map::const_iterator end() const { return docs_.end(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(docs_.size());
    for (const auto& [id, doc] : docs_) out.push_back(id);
    return out;
  }

  friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;

 private:
  friend KnowledgeBase RemoveDocument(const KnowledgeBase&, const std::string&);
  friend KnowledgeBase InsertDocuments(const KnowledgeBase&,
                                       std::vector<Document>);
  Map docs_;
};

// Neighbouring knowledge base under add/remove adjacency.
inline KnowledgeBase RemoveDocument(const KnowledgeBase& kb,
                                    const std::string& doc_id) {
  if (!kb.contains(doc_id)) throw Error(ErrorCode::kUnknownId, doc_id);
  KnowledgeBase out = kb;
  out.docs_.erase(doc_id);
  return out;
}

inline KnowledgeBase InsertDocuments(const KnowledgeBase& kb,
                                     std::vector<Document> docs) {
  KnowledgeBase out = kb;
  for (Document& doc : docs) {
    ValidateDocument(doc);
    std::string id = doc.id;
    auto [it, inserted] = out.docs_.emplace(id, std::move(doc));
    if (!inserted) throw Error(ErrorCode::kDuplicateId, id);
  }
  return out;
}

// Parses one JSONL corpus. Blank lines are skipped but still counted for
// line numbers (1-based).
inline KnowledgeBase ParseCorpus(std::istream& in) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw std::invalid_argument("not an object");
      doc.id = obj.at("id").get<std::string>();
      doc.text = obj.at("text").get<std::string>();
      if (obj.contains("sensitive")) doc.sensitive = obj["sensitive"].get<bool>();
      if (obj.contains("source_tag")) {
        doc.source_tag = obj["source_tag"].get<std::string>();
      }
      if (obj.contains("sensitive_spans")) {
        for (const auto& pair : obj["sensitive_spans"]) {
          if (!pair.is_array() || pair.size() != 2) {
            throw std::invalid_argument("span must be [start, end]");
          }
          const auto start = pair[0].get<long long>();
          const auto end = pair[1].get<long long>();
          if (start < 0 || end < 0) throw std::invalid_argument("negative span");
          doc.sensitive_spans.push_back({static_cast<std::size_t>(start),
                                         static_cast<std::size_t>(end)});
        }
      }
      ValidateDocument(doc);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedLine, std::to_string(line_no));
    }
    if (!seen.insert(doc.id).second) throw Error(ErrorCode::kDuplicateId, doc.id);
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw Error(ErrorCode::kEmptyCorpus, "no documents");
  return KnowledgeBase(std::move(docs));
}

inline KnowledgeBase IngestCorpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return ParseCorpus(in);
}

inline std::string SerializeDocument(const Document& doc) {
  nlohmann::ordered_json obj;
  obj["id"] = doc.id;
  obj["text"] = doc.text;
  obj["sensitive"] = doc.sensitive;
  auto spans = nlohmann::ordered_json::array();
  for (const Span& s : doc.sensitive_spans) spans.push_back({s.start, s.end});
  obj["sensitive_spans"] = std::move(spans);
  obj["source_tag"] = doc.source_tag;
  return obj.dump();
}

// Query pool: plain text, one query per line; blank lines dropped.
inline std::vector<std::string> ReadQueryPool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::vector<std::string> pool;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    pool.push_back(line);
  }
  return pool;
}

}  // namespace ragsec

#endif  // RAGSEC_CORPUS_HPP_
