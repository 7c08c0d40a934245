use std::fmt;

use super::spec::ModelId;
use super::structure::AGE_CLASSES;
use crate::error::{Error, Result};

/// A compartment block; every block spans all six age classes.
///
/// Infection orders are 1-based to match the usual `S1, I1, ...` naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    Maternal,
    Susceptible(u8),
    Exposed(u8),
    Infectious(u8),
    Recovered(u8),
    SevereInfectious,
    MildInfectious,
    Vaccinated,
    Immune,
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Compartment::Maternal => write!(f, "M"),
            Compartment::Susceptible(k) => write!(f, "S{k}"),
            Compartment::Exposed(k) => write!(f, "E{k}"),
            Compartment::Infectious(k) => write!(f, "I{k}"),
            Compartment::Recovered(k) => write!(f, "R{k}"),
            Compartment::SevereInfectious => write!(f, "Is"),
            Compartment::MildInfectious => write!(f, "Im"),
            Compartment::Vaccinated => write!(f, "V"),
            Compartment::Immune => write!(f, "Rfinal"),
        }
    }
}

/// Ordered compartment blocks of a model; values are stored block-major,
/// `index = block * 6 + age`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    model: ModelId,
    blocks: Vec<Compartment>,
}

impl Layout {
    pub fn new(model: ModelId) -> Self {
        use Compartment::*;
        let blocks = match model {
            ModelId::A => vec![
                Maternal,
                Susceptible(1),
                SevereInfectious,
                MildInfectious,
                Recovered(1),
            ],
            ModelId::B => vec![
                Maternal,
                Susceptible(1),
                Infectious(1),
                Recovered(1),
                Susceptible(2),
                Infectious(2),
                Recovered(2),
                Susceptible(3),
                Infectious(3),
                Recovered(3),
            ],
            ModelId::C => vec![
                Maternal,
                Susceptible(1),
                Exposed(1),
                Infectious(1),
                Recovered(1),
                Susceptible(2),
                Exposed(2),
                Infectious(2),
                Recovered(2),
                Susceptible(3),
                Exposed(3),
                Infectious(3),
                Recovered(3),
            ],
            ModelId::D | ModelId::E => vec![
                Maternal,
                Susceptible(1),
                Infectious(1),
                Susceptible(2),
                Infectious(2),
                Susceptible(3),
                Infectious(3),
                Susceptible(4),
                Infectious(4),
                Immune,
            ],
        };
        Layout { model, blocks }
    }

    /// Layout used when vaccination is wired in. Only model A gains a block
    /// (`V`); the other models route vaccinees into existing compartments.
    pub fn with_vaccination(model: ModelId) -> Self {
        let mut layout = Layout::new(model);
        if model == ModelId::A {
            layout.blocks.push(Compartment::Vaccinated);
        }
        layout
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn blocks(&self) -> &[Compartment] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len() * AGE_CLASSES
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, c: Compartment) -> Option<usize> {
        self.blocks.iter().position(|b| *b == c)
    }

    pub fn index(&self, c: Compartment, age: usize) -> Option<usize> {
        self.block(c).map(|b| b * AGE_CLASSES + age)
    }

    /// `(compartment, infection order, age class)` of every slot, in storage
    /// order. Order is 0 for compartments outside the infection sequence.
    pub fn slots(&self) -> impl Iterator<Item = (Compartment, u8, usize)> + '_ {
        self.blocks.iter().flat_map(|&c| {
            let order = match c {
                Compartment::Susceptible(k)
                | Compartment::Exposed(k)
                | Compartment::Infectious(k)
                | Compartment::Recovered(k) => k,
                Compartment::SevereInfectious | Compartment::MildInfectious => 1,
                _ => 0,
            };
            (0..AGE_CLASSES).map(move |a| (c, order, a))
        })
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.model)?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

/// Compartment occupancies laid out according to a [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Layout,
    values: Vec<f64>,
}

impl StateVector {
    pub fn zeros(layout: Layout) -> Self {
        let n = layout.len();
        StateVector {
            layout,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for {layout}", layout.len()),
                found: values.len().to_string(),
            });
        }
        Ok(StateVector { layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, c: Compartment, age: usize) -> f64 {
        self.layout.index(c, age).map_or(0.0, |i| self.values[i])
    }

    pub fn set(&mut self, c: Compartment, age: usize, value: f64) {
        let i = self
            .layout
            .index(c, age)
            .unwrap_or_else(|| panic!("{c} not in layout {}", self.layout));
        self.values[i] = value;
    }

    /// Population of every age class.
    pub fn class_totals(&self) -> [f64; AGE_CLASSES] {
        class_totals(&self.values)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Re-expresses the state in `layout`, which must contain every block of
    /// the current layout; new blocks start empty.
    pub fn extend_to(&self, layout: Layout) -> Result<StateVector> {
        let mut out = StateVector::zeros(layout);
        for (b, &c) in self.layout.blocks.iter().enumerate() {
            let nb = out.layout.block(c).ok_or_else(|| Error::LayoutMismatch {
                expected: out.layout.model,
                found: self.layout.to_string(),
            })?;
            out.values[nb * AGE_CLASSES..(nb + 1) * AGE_CLASSES]
                .copy_from_slice(&self.values[b * AGE_CLASSES..(b + 1) * AGE_CLASSES]);
        }
        Ok(out)
    }

    /// Drops blocks that `layout` does not have.
    pub fn restrict_to(&self, layout: Layout) -> StateVector {
        let mut out = StateVector::zeros(layout);
        for (nb, &c) in out.layout.blocks.clone().iter().enumerate() {
            if let Some(b) = self.layout.block(c) {
                out.values[nb * AGE_CLASSES..(nb + 1) * AGE_CLASSES]
                    .copy_from_slice(&self.values[b * AGE_CLASSES..(b + 1) * AGE_CLASSES]);
            }
        }
        out
    }

    /// Clamps tiny negative values from integration to zero.
    pub fn clamp_nonnegative(&mut self) {
        for v in &mut self.values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

pub(crate) fn class_totals(values: &[f64]) -> [f64; AGE_CLASSES] {
    let mut n = [0.0; AGE_CLASSES];
    for block in values.chunks_exact(AGE_CLASSES) {
        for (a, v) in block.iter().enumerate() {
            n[a] += v;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes() {
        assert_eq!(Layout::new(ModelId::A).len(), 30);
        assert_eq!(Layout::new(ModelId::B).len(), 60);
        assert_eq!(Layout::new(ModelId::C).len(), 78);
        assert_eq!(Layout::new(ModelId::D).len(), 60);
        assert_eq!(Layout::new(ModelId::E).len(), 60);
        assert_eq!(Layout::with_vaccination(ModelId::A).len(), 36);
        assert_eq!(Layout::with_vaccination(ModelId::B).len(), 60);
    }

    #[test]
    fn extend_and_restrict() {
        let mut s = StateVector::zeros(Layout::new(ModelId::A));
        s.set(Compartment::Recovered(1), 4, 0.25);
        let v = s.extend_to(Layout::with_vaccination(ModelId::A)).unwrap();
        assert_eq!(v.get(Compartment::Recovered(1), 4), 0.25);
        assert_eq!(v.get(Compartment::Vaccinated, 4), 0.0);
        let back = v.restrict_to(Layout::new(ModelId::A));
        assert_eq!(back.values(), s.values());
        assert!(s.extend_to(Layout::new(ModelId::B)).is_err());
    }

    #[test]
    fn slots_carry_orders() {
        let layout = Layout::new(ModelId::C);
        let slots: Vec<_> = layout.slots().collect();
        assert_eq!(slots.len(), 78);
        assert_eq!(slots[2 * 6 + 3], (Compartment::Exposed(1), 1, 3));
        assert_eq!(slots[0], (Compartment::Maternal, 0, 0));
    }
}
