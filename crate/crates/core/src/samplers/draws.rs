use std::time::Duration;

use super::McmcSettings;

/// One parameter's draws within one chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Count(Vec<u64>),
    Real(Vec<f64>),
    /// Derived ratio that is undefined (`None`) at a zero denominator.
    Measure(Vec<Option<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Count,
    Real,
    Measure,
}

impl Column {
    pub fn empty(kind: ColumnKind) -> Self {
        match kind {
            ColumnKind::Count => Column::Count(Vec::new()),
            ColumnKind::Real => Column::Real(Vec::new()),
            ColumnKind::Measure => Column::Measure(Vec::new()),
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Count(_) => ColumnKind::Count,
            Column::Real(_) => ColumnKind::Real,
            Column::Measure(_) => ColumnKind::Measure,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Count(v) => v.len(),
            Column::Real(v) => v.len(),
            Column::Measure(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        match self {
            Column::Count(v) => Some(v[i] as f64),
            Column::Real(v) => Some(v[i]),
            Column::Measure(v) => v[i],
        }
    }

    /// Values as doubles; undefined measure draws are `None`.
    pub fn to_f64(&self) -> Vec<Option<f64>> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn as_counts(&self) -> Option<&[u64]> {
        match self {
            Column::Count(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    /// 1-based sweep index of each retained draw.
    pub iterations: Vec<u64>,
    pub columns: Vec<Column>,
}

impl ChainDraws {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DrawMeta {
    pub settings: Option<McmcSettings>,
    pub elapsed: Option<Duration>,
}

/// Retained posterior draws of named parameters, one block per chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    names: Vec<String>,
    chains: Vec<ChainDraws>,
    pub meta: DrawMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DrawShapeError {
    #[error("chain {chain} has {got} columns, expected {expected}")]
    ColumnCount { chain: usize, got: usize, expected: usize },
    #[error("column `{name}` in chain {chain} has {got} draws, expected {expected}")]
    ColumnLength { name: String, chain: usize, got: usize, expected: usize },
    #[error("column `{name}` changes type between chains")]
    MixedKinds { name: String },
    #[error("duplicate column `{0}`")]
    Duplicate(String),
    #[error("draw layouts differ (chains or iterations do not line up)")]
    Misaligned,
}

impl DrawMatrix {
    pub fn new(names: Vec<String>, chains: Vec<ChainDraws>) -> Result<Self, DrawShapeError> {
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(DrawShapeError::Duplicate(a.clone()));
            }
        }
        for (c, chain) in chains.iter().enumerate() {
            if chain.columns.len() != names.len() {
                return Err(DrawShapeError::ColumnCount { chain: c, got: chain.columns.len(), expected: names.len() });
            }
            for (name, col) in names.iter().zip(&chain.columns) {
                if col.len() != chain.len() {
                    return Err(DrawShapeError::ColumnLength {
                        name: name.clone(),
                        chain: c,
                        got: col.len(),
                        expected: chain.len(),
                    });
                }
            }
        }
        if let Some(first) = chains.first() {
            for chain in &chains[1..] {
                for (k, name) in names.iter().enumerate() {
                    if chain.columns[k].kind() != first.columns[k].kind() {
                        return Err(DrawShapeError::MixedKinds { name: name.clone() });
                    }
                }
            }
        }
        Ok(Self { names, chains, meta: DrawMeta::default() })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn chains(&self) -> &[ChainDraws] {
        &self.chains
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(ChainDraws::len).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Per-chain columns for `name`.
    pub fn column(&self, name: &str) -> Option<Vec<&Column>> {
        let k = self.index_of(name)?;
        Some(self.chains.iter().map(|c| &c.columns[k]).collect())
    }

    pub fn kind(&self, name: &str) -> Option<ColumnKind> {
        let k = self.index_of(name)?;
        self.chains.first().map(|c| c.columns[k].kind())
    }

    /// Pooled count draws for `name` in chain order.
    pub fn pooled_counts(&self, name: &str) -> Option<Vec<u64>> {
        let cols = self.column(name)?;
        let mut out = Vec::with_capacity(self.total_draws());
        for col in cols {
            out.extend_from_slice(col.as_counts()?);
        }
        Some(out)
    }

    /// Append a column computed per chain.
    pub fn push_column(&mut self, name: &str, per_chain: Vec<Column>) -> Result<(), DrawShapeError> {
        if self.index_of(name).is_some() {
            return Err(DrawShapeError::Duplicate(name.to_string()));
        }
        if per_chain.len() != self.chains.len() {
            return Err(DrawShapeError::Misaligned);
        }
        for (c, (chain, col)) in self.chains.iter().zip(&per_chain).enumerate() {
            if col.len() != chain.len() {
                return Err(DrawShapeError::ColumnLength {
                    name: name.to_string(),
                    chain: c,
                    got: col.len(),
                    expected: chain.len(),
                });
            }
        }
        self.names.push(name.to_string());
        for (chain, col) in self.chains.iter_mut().zip(per_chain) {
            chain.columns.push(col);
        }
        Ok(())
    }

    /// Rename columns; names not in the map are kept.
    pub fn rename(&mut self, map: &[(&str, &str)]) {
        for name in &mut self.names {
            if let Some((_, to)) = map.iter().find(|(from, _)| *from == name.as_str()) {
                *name = to.to_string();
            }
        }
    }

    /// Combine columns from a fit with an identical chain/iteration layout.
    pub fn merge(mut self, other: DrawMatrix) -> Result<Self, DrawShapeError> {
        if self.chains.len() != other.chains.len()
            || self.chains.iter().zip(&other.chains).any(|(a, b)| a.iterations != b.iterations)
        {
            return Err(DrawShapeError::Misaligned);
        }
        for name in &other.names {
            if self.index_of(name).is_some() {
                return Err(DrawShapeError::Duplicate(name.clone()));
            }
        }
        self.names.extend(other.names);
        for (a, b) in self.chains.iter_mut().zip(other.chains) {
            a.columns.extend(b.columns);
        }
        if let (Some(a), Some(b)) = (self.meta.elapsed, other.meta.elapsed) {
            self.meta.elapsed = Some(a + b);
        }
        Ok(self)
    }

    /// The same draws with chains listed in a different order.
    pub fn permute_chains(&self, order: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            chains: order.iter().map(|&i| self.chains[i].clone()).collect(),
            meta: self.meta.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DrawMatrix {
        let chain = |base: u64| ChainDraws {
            iterations: vec![1, 2, 3],
            columns: vec![Column::Count(vec![base, base + 1, base + 2]), Column::Real(vec![0.1, 0.2, 0.3])],
        };
        DrawMatrix::new(vec!["n".into(), "p".into()], vec![chain(10), chain(20)]).unwrap()
    }

    #[test]
    fn shape_checks() {
        let bad = ChainDraws { iterations: vec![1, 2], columns: vec![Column::Count(vec![1])] };
        assert!(matches!(DrawMatrix::new(vec!["n".into()], vec![bad]), Err(DrawShapeError::ColumnLength { .. })));
        let a = ChainDraws { iterations: vec![1], columns: vec![Column::Count(vec![1])] };
        let b = ChainDraws { iterations: vec![1], columns: vec![Column::Real(vec![1.0])] };
        assert!(matches!(DrawMatrix::new(vec!["n".into()], vec![a, b]), Err(DrawShapeError::MixedKinds { .. })));
    }

    #[test]
    fn columns_rename_merge() {
        let mut d = small();
        assert_eq!(d.pooled_counts("n").unwrap(), vec![10, 11, 12, 20, 21, 22]);
        assert!(d.pooled_counts("p").is_none());
        d.rename(&[("n", "n1")]);
        assert!(d.index_of("n").is_none());
        let mut other = small();
        other.rename(&[("n", "n2"), ("p", "q")]);
        let merged = d.merge(other).unwrap();
        assert_eq!(merged.names(), ["n1", "p", "n2", "q"]);
        assert!(small().merge(small()).is_err());
    }

    #[test]
    fn push_column_checks_lengths() {
        let mut d = small();
        assert!(d.push_column("x", vec![Column::Real(vec![1.0]); 2]).is_err());
        d.push_column("x", vec![Column::Measure(vec![None, Some(1.0), None]); 2]).unwrap();
        assert_eq!(d.kind("x"), Some(ColumnKind::Measure));
        assert_eq!(d.column("x").unwrap()[0].get(1), Some(1.0));
    }
}
