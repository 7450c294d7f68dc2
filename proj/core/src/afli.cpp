#include "nfl/afli.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nfl {

const char* to_string(OpStatus s) {
  switch (s) {
    case OpStatus::Found: return "found";
    case OpStatus::NotFound: return "not_found";
    case OpStatus::Inserted: return "inserted";
    case OpStatus::AlreadyExists: return "already_exists";
    case OpStatus::Updated: return "updated";
    case OpStatus::Deleted: return "deleted";
    case OpStatus::OutOfKeySpace: return "out_of_key_space";
  }
  return "unknown";
}

namespace detail {

struct Bucket {
  std::uint32_t capacity;
  BucketMode mode;
  std::vector<KeyValue> data;

  Bucket(std::uint32_t cap, BucketMode m) : capacity(cap), mode(m) { data.reserve(cap); }

  const KeyValue* find(Key key) const {
    if (mode == BucketMode::Ordered) {
      for (const KeyValue& kv : data) {
        if (kv.key == key) return &kv;
        if (kv.key > key) return nullptr;
      }
      return nullptr;
    }
    for (const KeyValue& kv : data) {
      if (kv.key == key) return &kv;
    }
    return nullptr;
  }

  void add(KeyValue kv) {
    if (mode == BucketMode::Ordered) {
      auto it = std::lower_bound(data.begin(), data.end(), kv.key,
                                 [](const KeyValue& a, Key k) { return a.key < k; });
      data.insert(it, kv);
    } else {
      data.push_back(kv);
    }
  }

  bool remove(Key key) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].key != key) continue;
      if (mode == BucketMode::Ordered) {
        data.erase(data.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        data[i] = data.back();
        data.pop_back();
      }
      return true;
    }
    return false;
  }
};

struct Node {
  enum class Kind : std::uint8_t { Model, Dense } kind;
  explicit Node(Kind k) : kind(k) {}
};

// 4-way entry tag packed into two bitmaps.
enum class Tag : std::uint8_t { Empty = 0, Data = 1, Bucket = 2, Child = 3 };

struct Entry {
  Key key = 0.0;
  union {
    Payload payload;
    Bucket* bucket;
    Node* child;
  };
  Entry() : payload(0) {}
};

struct ModelNode : Node {
  LinearModel model;
  std::vector<Entry> entries;
  std::vector<std::uint64_t> bits_a, bits_b;

  explicit ModelNode(std::size_t size) : Node(Kind::Model), entries(size) {
    std::size_t words = (size + 63) / 64;
    bits_a.assign(words, 0);
    bits_b.assign(words, 0);
  }

  std::size_t size() const { return entries.size(); }

  Tag tag(std::size_t i) const {
    std::uint64_t a = (bits_a[i >> 6] >> (i & 63)) & 1;
    std::uint64_t b = (bits_b[i >> 6] >> (i & 63)) & 1;
    return static_cast<Tag>(a | (b << 1));
  }

  void set_tag(std::size_t i, Tag t) {
    std::uint64_t mask = 1ULL << (i & 63);
    if (static_cast<std::uint8_t>(t) & 1)
      bits_a[i >> 6] |= mask;
    else
      bits_a[i >> 6] &= ~mask;
    if (static_cast<std::uint8_t>(t) & 2)
      bits_b[i >> 6] |= mask;
    else
      bits_b[i >> 6] &= ~mask;
  }

  std::int64_t slot_of(Key key) const {
    std::int64_t p = model.predict(key);
    std::int64_t hi = static_cast<std::int64_t>(entries.size()) - 1;
    return std::clamp<std::int64_t>(p, 0, hi);
  }
};

struct DenseNode : Node {
  std::vector<KeyValue> data;  // always fully filled; gaps copy their predecessor
  std::size_t count = 0;       // logical keys

  explicit DenseNode(std::size_t size) : Node(Kind::Dense), data(size) {}
};

void free_node(Node* n) {
  if (n == nullptr) return;
  if (n->kind == Node::Kind::Model) {
    ModelNode* m = static_cast<ModelNode*>(n);
    for (std::size_t i = 0; i < m->size(); ++i) {
      Tag t = m->tag(i);
      if (t == Tag::Bucket) {
        delete m->entries[i].bucket;
      } else if (t == Tag::Child) {
        // Duplicated links are contiguous; free the child once per run.
        if (i == 0 || m->tag(i - 1) != Tag::Child || m->entries[i - 1].child != m->entries[i].child)
          free_node(m->entries[i].child);
      }
    }
    delete m;
  } else {
    delete static_cast<DenseNode*>(n);
  }
}

struct BuildCtx {
  const IndexConfig* cfg;
  std::uint64_t dgamma;
  std::uint32_t bucket_capacity;
};

DenseNode* make_dense(std::span<const KeyValue> pairs, std::uint64_t gaps) {
  const std::size_t n = pairs.size();
  const std::size_t size = n + static_cast<std::size_t>(gaps);
  DenseNode* node = new DenseNode(size);
  node->count = n;
  if (n == 0) return node;
  // Spread elements evenly; every unassigned slot copies its predecessor.
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t slot = i * size / n;
    while (next < slot) {
      node->data[next] = node->data[next - 1];
      ++next;
    }
    node->data[next++] = pairs[i];
  }
  while (next < size) {
    node->data[next] = node->data[next - 1];
    ++next;
  }
  return node;
}

Node* modelling(std::span<const KeyValue> pairs, const BuildCtx& ctx, std::uint32_t depth) {
  if (depth > ctx.cfg->max_depth) throw DepthExceeded("modelling: max_depth exceeded");
  const std::size_t n = pairs.size();
  if (n == 0) return make_dense(pairs, 16);

  // Linear fit against scaled ranks.
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += pairs[i].key;
    mean_y += static_cast<double>(i) * ctx.cfg->alpha;
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = pairs[i].key - mean_x;
    sxx += dx * dx;
    sxy += dx * (static_cast<double>(i) * ctx.cfg->alpha - mean_y);
  }
  LinearModel model;
  if (sxx != 0.0) {
    model.slope = sxy / sxx;
    model.intercept = mean_y - model.slope * mean_x;
  } else {
    model.slope = 0.0;
    model.intercept = mean_y;
  }

  bool one_position = model.slope == 0.0;
  if (!one_position) {
    std::int64_t first = model.predict(pairs.front().key);
    std::int64_t last = model.predict(pairs.back().key);
    one_position = first == last;
  }
  if (one_position) return make_dense(pairs, ctx.dgamma);

  // Rebase the intercept so the first key predicts slot 0, then size the
  // entry array and clamp. Positions must come from the rebased model so that
  // placement and later lookups agree bit-for-bit.
  model.intercept -= static_cast<double>(model.predict(pairs.front().key));
  std::vector<std::int64_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = model.predict(pairs[i].key);
  std::int64_t span = pos.back() - pos.front() + 1;
  std::int64_t size = std::min<std::int64_t>(
      static_cast<std::int64_t>(std::floor(static_cast<double>(n) * ctx.cfg->alpha)), span);
  if (size < 1) size = 1;
  for (std::size_t i = 0; i < n; ++i) pos[i] = std::clamp<std::int64_t>(pos[i], 0, size - 1);

  ModelNode* node = new ModelNode(static_cast<std::size_t>(size));
  node->model = model;

  // Entries are tagged as they fill, so freeing the node releases exactly
  // what a failing recursive call built so far.
  try {
    build_entries(node, pairs, pos, ctx, depth);
  } catch (...) {
    free_node(node);
    throw;
  }
  return node;
}

void build_entries(ModelNode* node, std::span<const KeyValue> pairs,
                   const std::vector<std::int64_t>& pos, const BuildCtx& ctx,
                   std::uint32_t depth) {
  const std::size_t n = pairs.size();
  const std::uint64_t threshold = std::min<std::uint64_t>(ctx.dgamma, ctx.cfg->bucket_cap);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && pos[j] == pos[i]) ++j;
    const std::uint64_t degree = j - i;
    const std::size_t slot = static_cast<std::size_t>(pos[i]);

    if (degree == 1) {
      node->entries[slot].key = pairs[i].key;
      node->entries[slot].payload = pairs[i].payload;
      node->set_tag(slot, Tag::Data);
      i = j;
    } else if (degree < threshold) {
      Bucket* b = new Bucket(ctx.bucket_capacity, ctx.cfg->bucket_mode);
      for (std::size_t k = i; k < j; ++k) b->data.push_back(pairs[k]);
      node->entries[slot].bucket = b;
      node->set_tag(slot, Tag::Bucket);
      i = j;
    } else {
      // Collect the maximal run of adjacent positions with degree above the
      // threshold and hand the whole run to one child.
      std::int64_t run_last = pos[i];
      std::size_t end = j;
      while (end < n && pos[end] == run_last + 1) {
        std::size_t e2 = end;
        while (e2 < n && pos[e2] == pos[end]) ++e2;
        if (e2 - end <= threshold) break;
        run_last = pos[end];
        end = e2;
      }
      std::span<const KeyValue> sub = pairs.subspan(i, end - i);
      Node* child;
      if (sub.size() == n) {
        // The run swallowed the entire input; recursing would repeat the same
        // fit forever.
        child = make_dense(sub, ctx.dgamma);
      } else {
        child = modelling(sub, ctx, depth + 1);
      }
      for (std::int64_t s = pos[i]; s <= run_last; ++s) {
        node->entries[static_cast<std::size_t>(s)].child = child;
        node->set_tag(static_cast<std::size_t>(s), Tag::Child);
      }
      i = end;
    }
  }
  return node;
}

// --- dense node operations ---

std::size_t dense_lower_bound(const DenseNode* d, Key key) {
  auto it = std::lower_bound(d->data.begin(), d->data.end(), key,
                             [](const KeyValue& a, Key k) { return a.key < k; });
  return static_cast<std::size_t>(it - d->data.begin());
}

inline bool dense_is_gap(const DenseNode* d, std::size_t s) {
  return s > 0 && d->data[s].key == d->data[s - 1].key;
}

std::optional<Payload> dense_lookup(const DenseNode* d, Key key) {
  if (d->count == 0) return std::nullopt;
  std::size_t pos = dense_lower_bound(d, key);
  if (pos < d->data.size() && d->data[pos].key == key) return d->data[pos].payload;
  return std::nullopt;
}

enum class DenseInsert { Inserted, AlreadyExists, Full };

DenseInsert dense_insert(DenseNode* d, Key key, Payload payload) {
  const std::size_t size = d->data.size();
  if (d->count == 0) {
    for (KeyValue& kv : d->data) kv = {key, payload};
    d->count = 1;
    return DenseInsert::Inserted;
  }
  std::size_t pos = dense_lower_bound(d, key);
  if (pos < size && d->data[pos].key == key) return DenseInsert::AlreadyExists;
  if (d->count == size) return DenseInsert::Full;

  // Nearest gap on either side; shift the stretch between it and the
  // insertion point by one.
  std::size_t left = 0;
  bool has_left = false;
  for (std::size_t s = pos; s-- > 1;) {
    if (dense_is_gap(d, s)) {
      left = s;
      has_left = true;
      break;
    }
  }
  std::size_t right = 0;
  bool has_right = false;
  for (std::size_t s = std::max<std::size_t>(pos, 1); s < size; ++s) {
    if (dense_is_gap(d, s)) {
      right = s;
      has_right = true;
      break;
    }
  }

  bool use_right;
  if (has_left && has_right)
    use_right = (right - pos) <= (pos - left);
  else
    use_right = has_right;

  if (use_right) {
    for (std::size_t s = right; s > pos; --s) d->data[s] = d->data[s - 1];
    d->data[pos] = {key, payload};
  } else {
    for (std::size_t s = left; s + 1 < pos; ++s) d->data[s] = d->data[s + 1];
    d->data[pos - 1] = {key, payload};
  }
  ++d->count;
  return DenseInsert::Inserted;
}

OpStatus dense_update(DenseNode* d, Key key, Payload payload) {
  if (d->count == 0) return OpStatus::NotFound;
  std::size_t pos = dense_lower_bound(d, key);
  if (pos >= d->data.size() || d->data[pos].key != key) return OpStatus::NotFound;
  d->data[pos].payload = payload;
  return OpStatus::Updated;
}

OpStatus dense_erase(DenseNode* d, Key key) {
  if (d->count == 0) return OpStatus::NotFound;
  const std::size_t size = d->data.size();
  std::size_t pos = dense_lower_bound(d, key);
  if (pos >= size || d->data[pos].key != key) return OpStatus::NotFound;

  std::size_t run_end = pos + 1;  // the element plus its gap copies
  while (run_end < size && d->data[run_end].key == key) ++run_end;

  if (pos > 0) {
    for (std::size_t s = pos; s < run_end; ++s) d->data[s] = d->data[pos - 1];
  } else if (d->count > 1) {
    std::size_t len = run_end - pos;
    for (std::size_t s = 0; s + len < size; ++s) d->data[s] = d->data[s + len];
    for (std::size_t s = size - len; s < size; ++s) d->data[s] = d->data[size - len - 1];
  }
  --d->count;
  return OpStatus::Deleted;
}

std::vector<KeyValue> dense_logical(const DenseNode* d) {
  std::vector<KeyValue> out;
  if (d->count == 0) return out;  // slots may hold stale copies
  out.reserve(d->count);
  for (std::size_t s = 0; s < d->data.size(); ++s) {
    if (!dense_is_gap(d, s)) out.push_back(d->data[s]);
    if (out.size() == d->count) break;
  }
  return out;
}

// --- tree operations ---

std::optional<Payload> node_lookup(const Node* n, Key key) {
  while (true) {
    if (n->kind == Node::Kind::Dense) return dense_lookup(static_cast<const DenseNode*>(n), key);
    const ModelNode* m = static_cast<const ModelNode*>(n);
    std::size_t slot = static_cast<std::size_t>(m->slot_of(key));
    switch (m->tag(slot)) {
      case Tag::Empty:
        return std::nullopt;
      case Tag::Data:
        if (m->entries[slot].key == key) return m->entries[slot].payload;
        return std::nullopt;
      case Tag::Bucket: {
        const KeyValue* kv = m->entries[slot].bucket->find(key);
        if (kv) return kv->payload;
        return std::nullopt;
      }
      case Tag::Child:
        n = m->entries[slot].child;
        break;
    }
  }
}

struct InsertResult {
  OpStatus status;
  Node* replacement;  // non-null when the callee rebuilt itself
};

InsertResult node_insert(Node* n, Key key, Payload payload, const BuildCtx& ctx,
                         std::uint32_t depth) {
  if (n->kind == Node::Kind::Dense) {
    DenseNode* d = static_cast<DenseNode*>(n);
    switch (dense_insert(d, key, payload)) {
      case DenseInsert::Inserted:
        return {OpStatus::Inserted, nullptr};
      case DenseInsert::AlreadyExists:
        return {OpStatus::AlreadyExists, nullptr};
      case DenseInsert::Full: {
        std::vector<KeyValue> pairs = dense_logical(d);
        auto it = std::lower_bound(pairs.begin(), pairs.end(), key,
                                   [](const KeyValue& a, Key k) { return a.key < k; });
        pairs.insert(it, {key, payload});
        Node* rebuilt = modelling(pairs, ctx, depth);
        return {OpStatus::Inserted, rebuilt};
      }
    }
  }

  ModelNode* m = static_cast<ModelNode*>(n);
  std::size_t slot = static_cast<std::size_t>(m->slot_of(key));
  Entry& e = m->entries[slot];
  switch (m->tag(slot)) {
    case Tag::Empty:
      e.key = key;
      e.payload = payload;
      m->set_tag(slot, Tag::Data);
      return {OpStatus::Inserted, nullptr};

    case Tag::Data: {
      if (e.key == key) return {OpStatus::AlreadyExists, nullptr};
      KeyValue a{e.key, e.payload}, b{key, payload};
      if (ctx.bucket_capacity >= 2) {
        Bucket* bucket = new Bucket(ctx.bucket_capacity, ctx.cfg->bucket_mode);
        bucket->add(a);
        bucket->add(b);
        e.bucket = bucket;
        m->set_tag(slot, Tag::Bucket);
      } else {
        KeyValue two[2];
        if (a.key < b.key) {
          two[0] = a;
          two[1] = b;
        } else {
          two[0] = b;
          two[1] = a;
        }
        e.child = modelling({two, 2}, ctx, depth + 1);
        m->set_tag(slot, Tag::Child);
      }
      return {OpStatus::Inserted, nullptr};
    }

    case Tag::Bucket: {
      Bucket* b = e.bucket;
      if (b->find(key)) return {OpStatus::AlreadyExists, nullptr};
      if (b->data.size() < b->capacity) {
        b->add({key, payload});
        return {OpStatus::Inserted, nullptr};
      }
      // Full bucket: model its contents together with the new pair.
      std::vector<KeyValue> pairs = b->data;
      std::sort(pairs.begin(), pairs.end(),
                [](const KeyValue& x, const KeyValue& y) { return x.key < y.key; });
      auto it = std::lower_bound(pairs.begin(), pairs.end(), key,
                                 [](const KeyValue& x, Key k) { return x.key < k; });
      pairs.insert(it, {key, payload});
      Node* child = modelling(pairs, ctx, depth + 1);
      delete b;
      e.child = child;
      m->set_tag(slot, Tag::Child);
      return {OpStatus::Inserted, nullptr};
    }

    case Tag::Child: {
      Node* child = e.child;
      InsertResult r = node_insert(child, key, payload, ctx, depth + 1);
      if (r.replacement) {
        // Update every entry of the duplicated-link run.
        std::size_t lo = slot;
        while (lo > 0 && m->tag(lo - 1) == Tag::Child && m->entries[lo - 1].child == child) --lo;
        std::size_t hi = slot;
        while (hi + 1 < m->size() && m->tag(hi + 1) == Tag::Child &&
               m->entries[hi + 1].child == child)
          ++hi;
        for (std::size_t s = lo; s <= hi; ++s) m->entries[s].child = r.replacement;
        free_node(child);
      }
      return {r.status, nullptr};
    }
  }
  return {OpStatus::NotFound, nullptr};  // unreachable
}

OpStatus node_update(Node* n, Key key, Payload payload) {
  while (true) {
    if (n->kind == Node::Kind::Dense)
      return dense_update(static_cast<DenseNode*>(n), key, payload);
    ModelNode* m = static_cast<ModelNode*>(n);
    std::size_t slot = static_cast<std::size_t>(m->slot_of(key));
    Entry& e = m->entries[slot];
    switch (m->tag(slot)) {
      case Tag::Empty:
        return OpStatus::NotFound;
      case Tag::Data:
        if (e.key != key) return OpStatus::NotFound;
        e.payload = payload;
        return OpStatus::Updated;
      case Tag::Bucket: {
        KeyValue* kv = const_cast<KeyValue*>(e.bucket->find(key));
        if (!kv) return OpStatus::NotFound;
        kv->payload = payload;
        return OpStatus::Updated;
      }
      case Tag::Child:
        n = e.child;
        break;
    }
  }
}

OpStatus node_erase(Node* n, Key key) {
  while (true) {
    if (n->kind == Node::Kind::Dense) return dense_erase(static_cast<DenseNode*>(n), key);
    ModelNode* m = static_cast<ModelNode*>(n);
    std::size_t slot = static_cast<std::size_t>(m->slot_of(key));
    Entry& e = m->entries[slot];
    switch (m->tag(slot)) {
      case Tag::Empty:
        return OpStatus::NotFound;
      case Tag::Data:
        if (e.key != key) return OpStatus::NotFound;
        m->set_tag(slot, Tag::Empty);
        return OpStatus::Deleted;
      case Tag::Bucket:
        return e.bucket->remove(key) ? OpStatus::Deleted : OpStatus::NotFound;
      case Tag::Child:
        n = e.child;
        break;
    }
  }
}

// --- stats and audit ---

void collect_stats(const Node* n, std::uint32_t depth, IndexStats& st, std::uint64_t& height_sum) {
  st.max_height = std::max(st.max_height, depth);
  if (n->kind == Node::Kind::Dense) {
    const DenseNode* d = static_cast<const DenseNode*>(n);
    ++st.dense_nodes;
    st.size_bytes += sizeof(DenseNode) + d->data.size() * sizeof(KeyValue);
    st.key_count += d->count;
    height_sum += d->count * depth;
    return;
  }
  const ModelNode* m = static_cast<const ModelNode*>(n);
  ++st.model_nodes;
  st.size_bytes += sizeof(ModelNode) + m->size() * sizeof(Entry) +
                   8 * (m->bits_a.size() + m->bits_b.size());
  for (std::size_t i = 0; i < m->size(); ++i) {
    switch (m->tag(i)) {
      case Tag::Empty:
        break;
      case Tag::Data:
        ++st.key_count;
        height_sum += depth;
        break;
      case Tag::Bucket: {
        const Bucket* b = m->entries[i].bucket;
        ++st.buckets;
        st.size_bytes += sizeof(Bucket) + b->capacity * sizeof(KeyValue);
        st.key_count += b->data.size();
        height_sum += b->data.size() * (depth + 1);
        break;
      }
      case Tag::Child:
        if (i == 0 || m->tag(i - 1) != Tag::Child || m->entries[i - 1].child != m->entries[i].child)
          collect_stats(m->entries[i].child, depth + 1, st, height_sum);
        break;
    }
  }
}

void collect_keys(const Node* n, std::vector<Key>& out) {
  if (n->kind == Node::Kind::Dense) {
    const DenseNode* d = static_cast<const DenseNode*>(n);
    for (const KeyValue& kv : dense_logical(d)) out.push_back(kv.key);
    return;
  }
  const ModelNode* m = static_cast<const ModelNode*>(n);
  for (std::size_t i = 0; i < m->size(); ++i) {
    switch (m->tag(i)) {
      case Tag::Empty:
        break;
      case Tag::Data:
        out.push_back(m->entries[i].key);
        break;
      case Tag::Bucket:
        for (const KeyValue& kv : m->entries[i].bucket->data) out.push_back(kv.key);
        break;
      case Tag::Child:
        if (i == 0 || m->tag(i - 1) != Tag::Child || m->entries[i - 1].child != m->entries[i].child)
          collect_keys(m->entries[i].child, out);
        break;
    }
  }
}

struct AuditCtx {
  const IndexConfig* cfg;
  std::uint64_t dgamma;
  std::uint32_t bucket_capacity;
  std::string failure;
};

bool audit_node(const Node* n, std::uint32_t depth, AuditCtx& ctx) {
  if (depth > ctx.cfg->max_depth) {
    ctx.failure = "depth exceeds max_depth";
    return false;
  }
  if (n->kind == Node::Kind::Dense) {
    const DenseNode* d = static_cast<const DenseNode*>(n);
    std::size_t distinct = 0;
    for (std::size_t s = 0; s < d->data.size(); ++s) {
      if (s > 0 && d->data[s].key < d->data[s - 1].key) {
        ctx.failure = "dense node array not non-decreasing";
        return false;
      }
      if (!dense_is_gap(d, s)) ++distinct;
    }
    if (d->count > 0 && distinct != d->count) {
      ctx.failure = "dense node count does not match distinct keys";
      return false;
    }
    return true;
  }

  const ModelNode* m = static_cast<const ModelNode*>(n);
  const std::uint64_t cap_bound =
      std::min<std::uint64_t>(ctx.dgamma, ctx.cfg->bucket_cap);
  for (std::size_t i = 0; i < m->size(); ++i) {
    switch (m->tag(i)) {
      case Tag::Empty:
        break;
      case Tag::Data:
        if (static_cast<std::size_t>(m->slot_of(m->entries[i].key)) != i) {
          ctx.failure = "data slot violates precise placement";
          return false;
        }
        break;
      case Tag::Bucket: {
        const Bucket* b = m->entries[i].bucket;
        if (b->data.size() > cap_bound || b->data.size() > b->capacity) {
          ctx.failure = "bucket length exceeds capacity bound";
          return false;
        }
        for (const KeyValue& kv : b->data) {
          if (static_cast<std::size_t>(m->slot_of(kv.key)) != i) {
            ctx.failure = "bucket key predicts a different slot";
            return false;
          }
        }
        if (b->mode == BucketMode::Ordered) {
          for (std::size_t k = 1; k < b->data.size(); ++k) {
            if (b->data[k - 1].key >= b->data[k].key) {
              ctx.failure = "ordered bucket out of order";
              return false;
            }
          }
        }
        break;
      }
      case Tag::Child: {
        bool run_start = i == 0 || m->tag(i - 1) != Tag::Child ||
                         m->entries[i - 1].child != m->entries[i].child;
        if (!run_start) break;
        const Node* child = m->entries[i].child;
        std::size_t hi = i;
        while (hi + 1 < m->size() && m->tag(hi + 1) == Tag::Child &&
               m->entries[hi + 1].child == child)
          ++hi;
        // The same handle must not reappear outside this contiguous run.
        for (std::size_t s = hi + 1; s < m->size(); ++s) {
          if (m->tag(s) == Tag::Child && m->entries[s].child == child) {
            ctx.failure = "duplicated child link is not contiguous";
            return false;
          }
        }
        std::vector<Key> child_keys;
        collect_keys(child, child_keys);
        for (Key k : child_keys) {
          std::size_t slot = static_cast<std::size_t>(m->slot_of(k));
          if (slot < i || slot > hi) {
            ctx.failure = "child holds a key predicting outside its run";
            return false;
          }
        }
        if (!audit_node(child, depth + 1, ctx)) return false;
        break;
      }
    }
  }
  return true;
}

}  // namespace detail

using namespace detail;

Index::Index(IndexConfig cfg) : cfg_(cfg) {
  if (!(cfg_.alpha >= 1.0)) throw InvalidArgument("Index: alpha must be >= 1");
  if (cfg_.bucket_cap < 2) throw InvalidArgument("Index: bucket_cap must be >= 2");
  if (!(cfg_.gamma > 0.0) || cfg_.gamma > 1.0)
    throw InvalidArgument("Index: gamma must be in (0, 1]");
  root_ = new DenseNode(16);
  bucket_capacity_ = static_cast<std::uint32_t>(std::min<std::uint64_t>(dgamma_, cfg_.bucket_cap));
}

Index::~Index() { free_node(root_); }

Index::Index(Index&& o) noexcept
    : cfg_(o.cfg_),
      root_(o.root_),
      dgamma_(o.dgamma_),
      bucket_capacity_(o.bucket_capacity_),
      key_count_(o.key_count_),
      span_lo_(o.span_lo_),
      span_hi_(o.span_hi_),
      has_span_(o.has_span_) {
  o.root_ = nullptr;
}

Index& Index::operator=(Index&& o) noexcept {
  if (this != &o) {
    free_node(root_);
    cfg_ = o.cfg_;
    root_ = o.root_;
    dgamma_ = o.dgamma_;
    bucket_capacity_ = o.bucket_capacity_;
    key_count_ = o.key_count_;
    span_lo_ = o.span_lo_;
    span_hi_ = o.span_hi_;
    has_span_ = o.has_span_;
    o.root_ = nullptr;
  }
  return *this;
}

void Index::reset() {
  free_node(root_);
  root_ = new DenseNode(16);
  dgamma_ = 1;
  bucket_capacity_ = static_cast<std::uint32_t>(std::min<std::uint64_t>(dgamma_, cfg_.bucket_cap));
  key_count_ = 0;
  has_span_ = false;
}

void Index::bulkload(std::span<const KeyValue> pairs) {
  reset();
  if (pairs.empty()) return;

  std::vector<Key> keys(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    keys[i] = pairs[i].key;
    if (i > 0 && !(keys[i] > keys[i - 1]))
      throw DuplicateKey("bulkload: keys must be strictly increasing");
  }

  LinearModel whole = fit_linear_scaled_ranks(keys, cfg_.alpha);
  std::vector<std::uint64_t> degrees = sorted_degrees(keys, whole);
  dgamma_ = tail_from_degrees(degrees, cfg_.gamma);
  bucket_capacity_ = static_cast<std::uint32_t>(std::min<std::uint64_t>(dgamma_, cfg_.bucket_cap));

  BuildCtx ctx{&cfg_, dgamma_, bucket_capacity_};
  Node* built = modelling(pairs, ctx, 1);
  free_node(root_);
  root_ = built;
  key_count_ = pairs.size();
  span_lo_ = keys.front();
  span_hi_ = keys.back();
  has_span_ = true;
}

std::optional<Payload> Index::lookup(Key key) const { return node_lookup(root_, key); }

OpStatus Index::insert(Key key, Payload payload) {
  if (!has_span_ || key < span_lo_ || key > span_hi_) return OpStatus::OutOfKeySpace;
  return insert_unchecked(key, payload);
}

OpStatus Index::insert_unchecked(Key key, Payload payload) {
  BuildCtx ctx{&cfg_, dgamma_, bucket_capacity_};
  InsertResult r = node_insert(root_, key, payload, ctx, 1);
  if (r.replacement) {
    free_node(root_);
    root_ = r.replacement;
  }
  if (r.status == OpStatus::Inserted) ++key_count_;
  return r.status;
}

OpStatus Index::update(Key key, Payload payload) { return node_update(root_, key, payload); }

OpStatus Index::erase(Key key) {
  OpStatus s = node_erase(root_, key);
  if (s == OpStatus::Deleted) --key_count_;
  return s;
}

IndexStats Index::stats() const {
  IndexStats st;
  std::uint64_t height_sum = 0;
  collect_stats(root_, 1, st, height_sum);
  st.avg_height = st.key_count ? static_cast<double>(height_sum) / st.key_count : 0.0;
  return st;
}

std::optional<std::string> Index::audit() const {
  AuditCtx ctx{&cfg_, dgamma_, bucket_capacity_, {}};
  if (!audit_node(root_, 1, ctx)) return ctx.failure;
  IndexStats st;
  std::uint64_t height_sum = 0;
  collect_stats(root_, 1, st, height_sum);
  if (st.key_count != key_count_) {
    std::ostringstream os;
    os << "key_count mismatch: tree holds " << st.key_count << ", index recorded " << key_count_;
    return os.str();
  }
  return std::nullopt;
}

}  // namespace nfl
