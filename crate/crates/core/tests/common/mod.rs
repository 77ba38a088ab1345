#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use ivy::tmk::{
    load_model, Action, ArithOp, CmpOp, EntityKind, Expression, KnowledgeEntity, Method, ParameterSpec, Relation,
    State, Task, TmkModel, Transition, Value, ValueKind, WorldState,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const SAFE: &str = "river_crossing.tmk.json";
pub const UNSAFE: &str = "river_crossing_unsafe.tmk.json";

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> TmkModel {
    load_model(fixture_path(name)).unwrap()
}

pub const GUARD_ANSWER: &str = "In the river crossing problem, the guards are individuals who need to be transported \
across the river. They play a crucial role in ensuring that the prisoners do not escape during the crossing.";

pub const GUARD_DRAFT: &str =
    "In the river crossing problem, the guards are one of the individuals who need to be transported across the river.";

/// Guard-safety checked directly on slot values: on each bank, guards are
/// absent or at least as many as the prisoners.
pub fn bank_is_safe(ws: &WorldState) -> bool {
    let n = |slot: &str| match ws.get(slot) {
        Some(Value::Int(v)) => *v,
        other => panic!("slot {slot} is {other:?}"),
    };
    let safe = |g: i64, p: i64| g == 0 || g >= p;
    safe(n("left_guards"), n("left_prisoners")) && safe(n("right_guards"), n("right_prisoners"))
}

const WORDS: &[&str] =
    &["lamp", "gear", "valve", "crane", "mixer", "river", "bridge", "signal", "pallet", "sensor", "hatch", "relay"];

fn word(rng: &mut impl Rng) -> &'static str {
    WORDS.choose(rng).unwrap()
}

fn sentence(rng: &mut impl Rng) -> String {
    let n = rng.random_range(2..7);
    let mut s: Vec<&str> = (0..n).map(|_| word(rng)).collect();
    s.push("ok");
    let mut text = s.join(" ");
    text.push('.');
    text
}

#[derive(Clone)]
struct Slot {
    name: String,
    kind: ValueKind,
    symbols: Vec<String>,
}

fn int_expr(rng: &mut impl Rng, slots: &[Slot], depth: u32) -> Expression {
    let ints: Vec<&Slot> = slots.iter().filter(|s| s.kind == ValueKind::Integer).collect();
    if depth == 0 || rng.random_bool(0.4) {
        return match ints.choose(rng) {
            Some(s) if rng.random_bool(0.6) => Expression::slot(s.name.clone()),
            _ => Expression::Int(rng.random_range(-5..10)),
        };
    }
    let op = if rng.random_bool(0.5) { ArithOp::Add } else { ArithOp::Sub };
    Expression::arith(op, int_expr(rng, slots, depth - 1), int_expr(rng, slots, depth - 1))
}

fn bool_expr(rng: &mut impl Rng, slots: &[Slot], depth: u32) -> Expression {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        let bools: Vec<&Slot> = slots.iter().filter(|s| s.kind == ValueKind::Boolean).collect();
        return match bools.choose(rng) {
            Some(s) if rng.random_bool(0.5) => Expression::slot(s.name.clone()),
            _ => Expression::Bool(rng.random_bool(0.5)),
        };
    }
    match rng.random_range(0..5) {
        0 => {
            let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
            Expression::cmp(*ops.choose(rng).unwrap(), int_expr(rng, slots, depth - 1), int_expr(rng, slots, depth - 1))
        }
        1 => {
            let enums: Vec<&Slot> = slots.iter().filter(|s| s.kind == ValueKind::Enum).collect();
            match enums.choose(rng) {
                Some(s) => Expression::cmp(
                    if rng.random_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne },
                    Expression::slot(s.name.clone()),
                    Expression::Enum(s.symbols.choose(rng).unwrap().clone()),
                ),
                None => Expression::Bool(true),
            }
        }
        2 => Expression::And((0..rng.random_range(2..4)).map(|_| bool_expr(rng, slots, depth - 1)).collect()),
        3 => Expression::Or((0..rng.random_range(2..4)).map(|_| bool_expr(rng, slots, depth - 1)).collect()),
        _ => Expression::Not(Box::new(bool_expr(rng, slots, depth - 1))),
    }
}

fn value_expr(rng: &mut impl Rng, slot: &Slot, slots: &[Slot]) -> Expression {
    match slot.kind {
        ValueKind::Integer => int_expr(rng, slots, 2),
        ValueKind::Boolean => bool_expr(rng, slots, 2),
        ValueKind::Enum => Expression::Enum(slot.symbols.choose(rng).unwrap().clone()),
    }
}

fn param(rng: &mut impl Rng, name: String) -> (ParameterSpec, Slot) {
    let kind = *[ValueKind::Integer, ValueKind::Boolean, ValueKind::Enum].choose(rng).unwrap();
    let symbols: Vec<String> = match kind {
        ValueKind::Enum => {
            let set: BTreeSet<&str> = (0..rng.random_range(1..4)).map(|_| word(rng)).collect();
            set.into_iter().map(String::from).collect()
        }
        _ => Vec::new(),
    };
    let slot = Slot { name: name.clone(), kind, symbols: symbols.clone() };
    let constraint = (kind == ValueKind::Integer && rng.random_bool(0.5))
        .then(|| Expression::cmp(CmpOp::Ge, Expression::slot(name.clone()), Expression::Int(rng.random_range(-3..1))));
    let spec =
        ParameterSpec { name, value_kind: kind, enum_values: (kind == ValueKind::Enum).then_some(symbols), constraint };
    (spec, slot)
}

fn initial_value(rng: &mut impl Rng, slot: &Slot) -> Value {
    match slot.kind {
        ValueKind::Integer => Value::Int(rng.random_range(0..5)),
        ValueKind::Boolean => Value::Bool(rng.random_bool(0.5)),
        ValueKind::Enum => Value::Sym(slot.symbols.choose(rng).unwrap().clone()),
    }
}

/// A random model that passes validation with no errors.
pub fn random_model(rng: &mut impl Rng) -> TmkModel {
    let mut tasks = Vec::new();
    let mut methods = Vec::new();
    let mut initial = BTreeMap::new();
    for t in 0..rng.random_range(1..4) {
        let task_id = format!("task_{t}");
        let mut slots = Vec::new();
        let (mut givens, mut makes) = (Vec::new(), Vec::new());
        for p in 0..rng.random_range(1..5) {
            let (spec, slot) = param(rng, format!("t{t}_p{p}"));
            if p > 0 && rng.random_bool(0.3) {
                makes.push(spec);
            } else {
                if rng.random_bool(0.5) {
                    initial.insert(slot.name.clone(), initial_value(rng, &slot));
                }
                givens.push(spec);
            }
            slots.push(slot);
        }
        tasks.push(Task {
            id: task_id.clone(),
            name: format!("{} {}", word(rng), word(rng)),
            description: sentence(rng),
            givens,
            makes,
        });
        for m in 0..rng.random_range(0..3) {
            let method_id = format!("t{t}_m{m}");
            let n_states = rng.random_range(1..5);
            let states: Vec<State> = (0..n_states)
                .map(|s| State {
                    id: format!("{method_id}_s{s}"),
                    name: format!("{} {}", word(rng), word(rng)),
                    description: sentence(rng),
                    sub_task_ref: (t > 0 && rng.random_bool(0.1)).then(|| format!("task_{}", rng.random_range(0..t))),
                })
                .collect();
            let transitions = (0..rng.random_range(0..6))
                .map(|i| {
                    let actions = (0..rng.random_range(0..3))
                        .map(|_| {
                            let target = slots.choose(rng).unwrap();
                            Action { slot: target.name.clone(), expression: value_expr(rng, target, &slots) }
                        })
                        .collect();
                    Transition {
                        id: format!("{method_id}_x{i}"),
                        from_state: states.choose(rng).unwrap().id.clone(),
                        to_state: states.choose(rng).unwrap().id.clone(),
                        description: format!("{}: {}", word(rng), sentence(rng)),
                        condition: bool_expr(rng, &slots, 3),
                        actions,
                    }
                })
                .collect();
            methods.push(Method {
                id: method_id,
                task_ref: task_id.clone(),
                description: sentence(rng),
                start_state: states[0].id.clone(),
                end_states: [states.choose(rng).unwrap().id.clone()].into_iter().collect(),
                invariant: rng.random_bool(0.5).then(|| bool_expr(rng, &slots, 2)),
                states,
                transitions,
            });
        }
    }
    let n_entities = rng.random_range(0..4);
    let knowledge = (0..n_entities)
        .map(|k| KnowledgeEntity {
            id: format!("k{k}"),
            name: word(rng).to_string(),
            kind: *[EntityKind::Concept, EntityKind::Object, EntityKind::Relation].choose(rng).unwrap(),
            description: sentence(rng),
            properties: (0..rng.random_range(0..3))
                .map(|_| (word(rng).to_string(), *[ValueKind::Integer, ValueKind::Boolean].choose(rng).unwrap()))
                .collect(),
            relations: (0..rng.random_range(0..3))
                .map(|_| Relation {
                    name: format!("{} with", word(rng)),
                    target: format!("k{}", rng.random_range(0..n_entities)),
                    description: rng.random_bool(0.5).then(|| sentence(rng)),
                })
                .collect(),
        })
        .collect();
    let default_initial = (!initial.is_empty() && rng.random_bool(0.7))
        .then(|| initial.into_iter().fold(WorldState::new(), |ws, (k, v)| ws.with(k, v)));
    TmkModel {
        id: format!("m{}", rng.random_range(0..1000)),
        title: format!("{} {}", word(rng), word(rng)),
        description: sentence(rng),
        tasks,
        methods,
        knowledge,
        default_initial,
    }
}

pub mod oracles {
    use std::cmp::Ordering;
    use std::collections::{HashMap, VecDeque};

    use ivy::classify::Category;
    use ivy::providers::{CompletionRequest, EmbeddingVector, HashedNgramEmbedder, LanguageModel, ProviderError};
    use ivy::retrieval::{build_index, DocCategory, Document, Index, RetrievalError, RetrievalSet};
    use rand::rngs::StdRng;
    use rand::seq::IndexedRandom;
    use rand::Rng;

    pub fn doc(id: String, category: DocCategory) -> Document {
        Document {
            title: id.clone(),
            text: format!("text {id}"),
            source_ref: id.clone(),
            doc_id: id,
            category,
            associated_method_ref: None,
        }
    }

    pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            (dot / (na * nb)).clamp(-1.0, 1.0)
        }
    }

    /// Small integer components make exact ties common.
    pub fn random_vector(rng: &mut StdRng) -> Vec<f64> {
        (0..256).map(|_| f64::from(rng.random_range(0..3u8))).collect()
    }

    /// 1000 vectors with 50 duplicated pairs and one zero vector; ids are shuffled against insertion order.
    pub fn tie_heavy_corpus(rng: &mut StdRng) -> Vec<(Document, EmbeddingVector)> {
        let mut vectors: Vec<Vec<f64>> = (0..1000).map(|_| random_vector(rng)).collect();
        for i in 0..50 {
            vectors[i * 20 + 1] = vectors[i * 20].clone();
        }
        vectors[999] = vec![0.0; 256];
        vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| (doc(format!("d{:04}", (i * 7919) % 1000), DocCategory::Knowledge), EmbeddingVector(v)))
            .collect()
    }

    /// Full sort by score descending, then doc id ascending.
    pub fn brute_top_k<'a>(corpus: &'a [(Document, EmbeddingVector)], query: &[f64], k: usize) -> Vec<&'a str> {
        let mut all: Vec<(f64, &str)> = corpus.iter().map(|(d, v)| (cosine(query, &v.0), d.doc_id.as_str())).collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(b.1)));
        all.into_iter().take(k).map(|e| e.1).collect()
    }

    /// Mismatches between `Index::top_k_vector` and the brute-force sort, over 20 queries and k in {1, 2, 5, 10}.
    pub fn top_k_mismatches(rng: &mut StdRng) -> Vec<String> {
        let corpus = tie_heavy_corpus(rng);
        let index = Index::from_vectors(corpus.clone()).unwrap();
        let mut bad = Vec::new();
        for q in 0..20 {
            let query = if q == 0 { corpus[0].1 .0.clone() } else { random_vector(rng) };
            for k in [1, 2, 5, 10] {
                let got = index.top_k_vector(&EmbeddingVector(query.clone()), k, None).unwrap();
                let got: Vec<&str> = got.iter().map(|s| s.document.doc_id.as_str()).collect();
                let want = brute_top_k(&corpus, &query, k);
                if got != want {
                    bad.push(format!("query {q}, k {k}: got {got:?}, want {want:?}"));
                }
            }
        }
        bad
    }

    const VOCAB: &[&str] = &["guard", "boat", "river", "bank", "load", "move", "prisoner", "count", "safe", "cross"];

    pub fn phrase(rng: &mut StdRng) -> String {
        (0..rng.random_range(1..6)).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
    }

    /// At least one Task doc; method links are absent, dangling or valid.
    pub fn random_corpus(rng: &mut StdRng) -> Index {
        let mut docs = Vec::new();
        let n_methods = rng.random_range(0..3);
        for m in 0..n_methods {
            let mut d = doc(format!("x/method/m{m}"), DocCategory::Method);
            d.text = phrase(rng);
            docs.push(d);
        }
        for t in 0..rng.random_range(1..4) {
            let mut d = doc(format!("x/task/t{t}"), DocCategory::Task);
            d.text = phrase(rng);
            d.associated_method_ref = match rng.random_range(0..3) {
                0 => None,
                1 => Some(format!("x/method/missing{t}")),
                _ if n_methods > 0 => Some(format!("x/method/m{}", rng.random_range(0..n_methods))),
                _ => None,
            };
            docs.push(d);
        }
        for k in 0..rng.random_range(0..6) {
            let mut d = doc(format!("x/knowledge/k{k}"), DocCategory::Knowledge);
            d.text = phrase(rng);
            docs.push(d);
        }
        build_index(docs, &HashedNgramEmbedder::default()).unwrap()
    }

    /// Checks one selection result against the category's filter rule.
    pub fn check_selection(
        index: &Index,
        category: Category,
        k: u8,
        result: Result<RetrievalSet, RetrievalError>,
    ) -> Result<(), String> {
        let k = usize::from(k);
        match (category, result) {
            (Category::KnowledgeModel, Ok(RetrievalSet::Ranked { documents })) => {
                let available = index.documents().filter(|d| d.category == DocCategory::Knowledge).count();
                if documents.len() != available.min(k) {
                    return Err(format!("{} knowledge docs, expected {}", documents.len(), available.min(k)));
                }
                match documents.iter().find(|d| d.document.category != DocCategory::Knowledge) {
                    Some(d) => Err(format!("{} leaked through the knowledge filter", d.document.doc_id)),
                    None => Ok(()),
                }
            }
            (Category::MultiModel, Ok(RetrievalSet::Ranked { documents })) if documents.len() == index.len().min(k) => {
                Ok(())
            }
            (Category::MethodTaskModel, Ok(RetrievalSet::TaskMethod { task, method })) => {
                let linked = task.document.associated_method_ref.as_deref() == Some(method.doc_id.as_str());
                if task.document.category == DocCategory::Task && method.category == DocCategory::Method && linked {
                    Ok(())
                } else {
                    Err(format!("bad pair {} / {}", task.document.doc_id, method.doc_id))
                }
            }
            (Category::MethodTaskModel, Err(RetrievalError::MissingAssociatedMethod(id))) => {
                let task = index.document(&id).ok_or_else(|| format!("error names unknown doc {id}"))?;
                let resolvable = task.associated_method_ref.as_deref().is_some_and(|m| index.document(m).is_some());
                if task.category == DocCategory::Task && !resolvable {
                    Ok(())
                } else {
                    Err(format!("{id} reported missing a method it has"))
                }
            }
            (Category::Irrelevant, Err(RetrievalError::NotRetrievable)) => Ok(()),
            (c, other) => Err(format!("{c:?} gave {other:?}")),
        }
    }

    /// Replies with the same text to every prompt.
    pub struct Fixed(pub String);

    impl LanguageModel for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn complete(&self, _: &CompletionRequest) -> Result<String, ProviderError> {
            Ok(self.0.clone())
        }
    }

    /// Fewest crossings for three guards and three prisoners with a two-seat
    /// boat, searched over (guards left, prisoners left, boat on left) directly.
    pub fn fewest_crossings() -> Option<usize> {
        let safe = |g: i32, p: i32| (g == 0 || g >= p) && (3 - g == 0 || 3 - g >= 3 - p);
        let start = (3, 3, true);
        let mut dist = HashMap::from([(start, 0usize)]);
        let mut queue = VecDeque::from([start]);
        while let Some((g, p, left)) = queue.pop_front() {
            let d = dist[&(g, p, left)];
            if (g, p, left) == (0, 0, false) {
                return Some(d);
            }
            for (dg, dp) in [(1, 0), (2, 0), (0, 1), (0, 2), (1, 1)] {
                let (ng, np) = if left { (g - dg, p - dp) } else { (g + dg, p + dp) };
                if !(0..=3).contains(&ng) || !(0..=3).contains(&np) || !safe(ng, np) {
                    continue;
                }
                let next = (ng, np, !left);
                if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(next) {
                    slot.insert(d + 1);
                    queue.push_back(next);
                }
            }
        }
        None
    }
}
