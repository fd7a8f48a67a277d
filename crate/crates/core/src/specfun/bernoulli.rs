use rug::{Float, Integer, Rational};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock, RwLock};

/// Even-index Bernoulli numbers B_0, B_2, B_4, ... published as a prefix.
fn even_cache() -> &'static RwLock<Vec<Rational>> {
    static CACHE: OnceLock<RwLock<Vec<Rational>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(vec![Rational::from(1)]))
}

/// Tangent numbers T_1..T_n by the in-place integer recurrence.
fn tangent_numbers(n: usize) -> Vec<Integer> {
    let mut t = vec![Integer::new(); n + 1];
    if n == 0 {
        return t;
    }
    t[1] = Integer::from(1);
    for k in 2..=n {
        t[k] = Integer::from(&t[k - 1] * (k as u64 - 1));
    }
    for k in 2..=n {
        for j in k..=n {
            let a = Integer::from(&t[j - 1] * (j as u64 - k as u64));
            let b = Integer::from(&t[j] * (j as u64 - k as u64 + 2));
            t[j] = a + b;
        }
    }
    t
}

fn extend_to(half: usize) {
    {
        let read = even_cache().read().expect("bernoulli cache poisoned");
        if read.len() > half {
            return;
        }
    }
    let mut write = even_cache().write().expect("bernoulli cache poisoned");
    if write.len() > half {
        return;
    }
    let target = (half + 1).max(2 * write.len());
    let t = tangent_numbers(target);
    let mut table = Vec::with_capacity(target + 1);
    table.push(Rational::from(1));
    for k in 1..=target {
        // B_{2k} = (-1)^{k-1} 2k T_k / (4^k (4^k - 1))
        let four_k = Integer::from(1) << (2 * k as u32);
        let den = Integer::from(&four_k * Integer::from(&four_k - 1u32));
        let num = Integer::from(&t[k] * (2 * k as u64));
        let mut b = Rational::from((num, den));
        if k % 2 == 0 {
            b = -b;
        }
        table.push(b);
    }
    *write = table;
}

/// B_n as an exact rational, with B_1 = -1/2.
pub fn bernoulli(n: usize) -> Rational {
    match n {
        0 => Rational::from(1),
        1 => Rational::from((-1, 2)),
        _ if n % 2 == 1 => Rational::new(),
        _ => {
            let half = n / 2;
            extend_to(half);
            even_cache().read().expect("bernoulli cache poisoned")[half].clone()
        }
    }
}

/// B_{2j}/(2j)! for j = 1..=count at the given binary precision, cached per precision.
pub(crate) fn em_coefficients(count: usize, prec: u32) -> Vec<Float> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Vec<Float>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    {
        let guard = cache.lock().expect("coefficient cache poisoned");
        if let Some(v) = guard.get(&prec) {
            if v.len() >= count {
                return v[..count].to_vec();
            }
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut fact = Integer::from(1);
    for j in 1..=count {
        fact *= (2 * j - 1) as u64;
        fact *= (2 * j) as u64;
        let q = bernoulli(2 * j) / Rational::from(&fact);
        out.push(Float::with_val(prec, &q));
    }
    let mut guard = cache.lock().expect("coefficient cache poisoned");
    let entry = guard.entry(prec).or_default();
    if entry.len() < out.len() {
        *entry = out.clone();
    }
    out
}

/// B_n rounded to the given binary precision.
pub fn bernoulli_float(n: usize, prec: u32) -> Float {
    Float::with_val(prec, &bernoulli(n))
}
