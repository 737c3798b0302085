//! Ground CNF construction (Tseitin) and a small DPLL decision procedure.

/// DIMACS-style literal: a positive or negated 1-based variable index.
pub(crate) type Lit = i32;

#[derive(Debug, Default)]
pub(crate) struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new_var(&mut self) -> Lit {
        self.num_vars += 1;
        self.num_vars as Lit
    }

    /// Reserves `n` consecutive variables and returns the first.
    pub fn new_vars(&mut self, n: usize) -> Lit {
        let first = self.num_vars + 1;
        self.num_vars += n;
        first as Lit
    }

    fn clause(&mut self, lits: Vec<Lit>) {
        self.clauses.push(lits);
    }

    pub fn and(&mut self, lits: &[Lit]) -> Lit {
        if let [single] = lits {
            return *single;
        }
        let v = self.new_var();
        let mut big = vec![v];
        for &l in lits {
            self.clause(vec![-v, l]);
            big.push(-l);
        }
        self.clause(big);
        v
    }

    pub fn or(&mut self, lits: &[Lit]) -> Lit {
        if let [single] = lits {
            return *single;
        }
        let v = self.new_var();
        let mut big = vec![-v];
        for &l in lits {
            self.clause(vec![v, -l]);
            big.push(l);
        }
        self.clause(big);
        v
    }

    pub fn iff(&mut self, a: Lit, b: Lit) -> Lit {
        let v = self.new_var();
        self.clause(vec![-v, -a, b]);
        self.clause(vec![-v, a, -b]);
        self.clause(vec![v, a, b]);
        self.clause(vec![v, -a, -b]);
        v
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        -self.iff(a, b)
    }
}

#[derive(Debug)]
pub(crate) struct BudgetExhausted;

/// Search-node counter shared across all solver calls of one query.
#[derive(Debug)]
pub(crate) struct Budget {
    pub used: u64,
    pub cap: u64,
}

impl Budget {
    pub fn charge(&mut self) -> Result<(), BudgetExhausted> {
        self.used += 1;
        if self.used > self.cap {
            Err(BudgetExhausted)
        } else {
            Ok(())
        }
    }
}

/// Decides satisfiability of `cnf` under the given unit assumptions.
pub(crate) fn satisfiable(
    cnf: &Cnf,
    assumptions: &[Lit],
    budget: &mut Budget,
) -> Result<bool, BudgetExhausted> {
    let mut solver = Solver {
        clauses: &cnf.clauses,
        values: vec![0; cnf.num_vars + 1],
        trail: Vec::new(),
    };
    for &lit in assumptions {
        match solver.value(lit) {
            1 => {}
            -1 => return Ok(false),
            _ => solver.assign(lit),
        }
    }
    solver.search(budget)
}

struct Solver<'a> {
    clauses: &'a [Vec<Lit>],
    // 1 true, -1 false, 0 unassigned; indexed by variable.
    values: Vec<i8>,
    trail: Vec<usize>,
}

enum Propagation {
    Conflict,
    Done,
}

impl Solver<'_> {
    fn value(&self, lit: Lit) -> i8 {
        let v = self.values[lit.unsigned_abs() as usize];
        if lit > 0 {
            v
        } else {
            -v
        }
    }

    fn assign(&mut self, lit: Lit) {
        let var = lit.unsigned_abs() as usize;
        self.values[var] = if lit > 0 { 1 } else { -1 };
        self.trail.push(var);
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let var = self.trail.pop().expect("trail entry");
            self.values[var] = 0;
        }
    }

    fn propagate(&mut self) -> Propagation {
        loop {
            let mut changed = false;
            for clause in self.clauses {
                let mut unassigned = None;
                let mut open = 0;
                let mut satisfied = false;
                for &lit in clause {
                    match self.value(lit) {
                        1 => {
                            satisfied = true;
                            break;
                        }
                        0 => {
                            open += 1;
                            unassigned = Some(lit);
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match open {
                    0 => return Propagation::Conflict,
                    1 => {
                        self.assign(unassigned.expect("unit literal"));
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Propagation::Done;
            }
        }
    }

    fn pick_branch(&self) -> Option<Lit> {
        self.clauses
            .iter()
            .filter(|c| !c.iter().any(|&l| self.value(l) == 1))
            .flat_map(|c| c.iter())
            .copied()
            .find(|&l| self.value(l) == 0)
    }

    fn search(&mut self, budget: &mut Budget) -> Result<bool, BudgetExhausted> {
        budget.charge()?;
        if let Propagation::Conflict = self.propagate() {
            return Ok(false);
        }
        let Some(lit) = self.pick_branch() else {
            return Ok(true);
        };
        let mark = self.trail.len();
        for choice in [lit, -lit] {
            self.assign(choice);
            if self.search(budget)? {
                return Ok(true);
            }
            self.undo_to(mark);
        }
        Ok(false)
    }
}
