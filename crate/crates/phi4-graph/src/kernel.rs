use serde::Serialize;

/// A propagator kind with its weak homogeneity `-a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Kernel {
    pub name: String,
    /// Degree counted positively: the kernel scales like distance to the `-a`.
    pub a: i64,
    /// The reference probe: degree `6 + 2 gamma` on the marked diagonal, 0 otherwise.
    pub probe: bool,
}

/// Degree of the resonant-product kernel carried by each triple.
pub const TRIPLE_DEGREE: i64 = 6;
/// Constant part of the probe's marked degree.
pub const PROBE_DEGREE: i64 = 6;

#[derive(Debug, Clone)]
pub struct KernelTable {
    kernels: Vec<Kernel>,
}

impl Default for KernelTable {
    fn default() -> Self {
        let k = |name: &str, a, probe| Kernel { name: name.into(), a, probe };
        Self {
            kernels: vec![
                k("L", 3, false),
                k("G1", 1, false),
                k("G2", 2, false),
                k("G3", 3, false),
                k("DL", 5, false),
                k("Q", 0, true),
            ],
        }
    }
}

impl KernelTable {
    /// Adds or replaces a propagator kind.
    pub fn register(&mut self, name: &str, a: i64) {
        self.kernels.retain(|k| k.name != name);
        self.kernels.push(Kernel { name: name.into(), a, probe: false });
    }

    pub fn get(&self, name: &str) -> Option<&Kernel> {
        self.kernels.iter().find(|k| k.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Kernel> {
        self.kernels.iter()
    }
}
