//! Mesh ingestion.
//!
//! Two ASCII formats are understood:
//!
//! * `node-ele` (Triangle style): a `.node` file with header `N 2 nattr nbnd`
//!   followed by `idx x y [attrs..] [marker]`, and an `.ele` file with header
//!   `N 3 nattr` followed by `idx v0 v1 v2 [attrs..]`. Indices are 0- or
//!   1-based; the base is taken from the first record of each file and must
//!   agree between the two. `#` starts a comment.
//! * `msh2`: Gmsh MSH 2.2 ASCII with `$Nodes` and `$Elements` sections. Only
//!   element type 2 (3-node triangle) is accepted.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::BaseMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    NodeEle,
    Msh2,
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node-ele" => Ok(Self::NodeEle),
            "msh2" | "msh" => Ok(Self::Msh2),
            other => Err(Error::InvalidArgument(format!("unknown mesh format `{other}`"))),
        }
    }
}

impl MeshFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "node" | "ele" => Some(Self::NodeEle),
            "msh" => Some(Self::Msh2),
            _ => None,
        }
    }
}

/// Loads a triangle mesh from disk.
///
/// For `node-ele`, `path` may name either file of the pair or their common
/// stem.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<BaseMesh> {
    match format {
        MeshFormat::NodeEle => {
            let node = path.with_extension("node");
            let ele = path.with_extension("ele");
            let node_text = read(&node)?;
            let ele_text = read(&ele)?;
            parse_node_ele(&node, &node_text, &ele, &ele_text)
        }
        MeshFormat::Msh2 => {
            let text = read(path)?;
            parse_msh2(path, &text)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Self {
            path,
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: PathBuf::from(self.path),
            line: self.line,
            msg: msg.into(),
        }
    }

    /// Next non-empty line with comments stripped, split into tokens.
    fn tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, raw) in self.inner.by_ref() {
            self.line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok(toks);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn parse<T: FromStr>(&self, tok: Option<&&str>, what: &str) -> Result<T> {
        let tok = tok.ok_or_else(|| self.err(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| self.err(format!("cannot parse {what} from `{tok}`")))
    }
}

fn parse_node_ele(node: &Path, node_text: &str, ele: &Path, ele_text: &str) -> Result<BaseMesh> {
    let mut lines = Lines::new(node, node_text);
    let header = lines.tokens()?;
    let n: usize = lines.parse(header.first(), "vertex count")?;
    let dim: usize = lines.parse(header.get(1), "dimension")?;
    if dim != 2 {
        return Err(lines.err(format!("expected dimension 2, found {dim}")));
    }
    let mut coords = Vec::with_capacity(n);
    let mut node_base = None;
    for k in 0..n {
        let toks = lines.tokens()?;
        let idx: usize = lines.parse(toks.first(), "vertex index")?;
        let base = *node_base.get_or_insert(idx);
        if base > 1 || idx != base + k {
            return Err(lines.err(format!(
                "vertex index {idx} does not continue a {base}-based sequence"
            )));
        }
        let x: f64 = lines.parse(toks.get(1), "x coordinate")?;
        let y: f64 = lines.parse(toks.get(2), "y coordinate")?;
        coords.push([x, y]);
    }
    let node_base = node_base.unwrap_or(0);

    let mut lines = Lines::new(ele, ele_text);
    let header = lines.tokens()?;
    let m: usize = lines.parse(header.first(), "cell count")?;
    let per_cell: usize = lines.parse(header.get(1), "vertices per cell")?;
    if per_cell != 3 {
        return Err(lines.err(format!(
            "non-triangle cell at element 0 ({per_cell} vertices per cell)"
        )));
    }
    let mut cells = Vec::with_capacity(m);
    for k in 0..m {
        let toks = lines.tokens()?;
        let idx: usize = lines.parse(toks.first(), "cell index")?;
        if k == 0 && idx != node_base {
            return Err(lines.err(format!(
                "index base mismatch: cells start at {idx} but vertices are {node_base}-based"
            )));
        }
        if idx != node_base + k {
            return Err(lines.err(format!("cell index {idx} out of sequence")));
        }
        let mut tri = [0usize; 3];
        for (j, slot) in tri.iter_mut().enumerate() {
            let v: usize = lines.parse(toks.get(j + 1), "cell vertex")?;
            if v < node_base || v - node_base >= n {
                return Err(lines.err(format!(
                    "vertex {v} out of range for {n} {node_base}-based vertices"
                )));
            }
            *slot = v - node_base;
        }
        cells.push(tri);
    }
    BaseMesh::new(coords, cells)
}

fn expect_section(lines: &mut Lines<'_>, name: &str) -> Result<()> {
    loop {
        let toks = lines.tokens()?;
        if toks[0] == name {
            return Ok(());
        }
        if !toks[0].starts_with('$') {
            continue;
        }
        // skip unrelated sections
        let end = format!("$End{}", &toks[0][1..]);
        loop {
            if lines.tokens()?[0] == end {
                break;
            }
        }
    }
}

fn parse_msh2(path: &Path, text: &str) -> Result<BaseMesh> {
    let mut lines = Lines::new(path, text);
    let first = lines.tokens()?;
    if first[0] != "$MeshFormat" {
        return Err(lines.err("expected $MeshFormat"));
    }
    let fmt = lines.tokens()?;
    let version: f64 = lines.parse(fmt.first(), "format version")?;
    let file_type: u32 = lines.parse(fmt.get(1), "file type")?;
    if !(2.0..3.0).contains(&version) || file_type != 0 {
        return Err(lines.err(format!(
            "only ASCII MSH 2.x is supported (found version {version}, type {file_type})"
        )));
    }
    if lines.tokens()?[0] != "$EndMeshFormat" {
        return Err(lines.err("expected $EndMeshFormat"));
    }

    expect_section(&mut lines, "$Nodes")?;
    let head = lines.tokens()?;
    let n: usize = lines.parse(head.first(), "node count")?;
    let mut ids = HashMap::with_capacity(n);
    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        let toks = lines.tokens()?;
        let id: usize = lines.parse(toks.first(), "node id")?;
        let x: f64 = lines.parse(toks.get(1), "x coordinate")?;
        let y: f64 = lines.parse(toks.get(2), "y coordinate")?;
        if ids.insert(id, coords.len()).is_some() {
            return Err(lines.err(format!("duplicate node id {id}")));
        }
        coords.push([x, y]);
    }
    if lines.tokens()?[0] != "$EndNodes" {
        return Err(lines.err("expected $EndNodes"));
    }

    expect_section(&mut lines, "$Elements")?;
    let head = lines.tokens()?;
    let m: usize = lines.parse(head.first(), "element count")?;
    let mut cells = Vec::with_capacity(m);
    for k in 0..m {
        let toks = lines.tokens()?;
        let kind: u32 = lines.parse(toks.get(1), "element type")?;
        if kind != 2 {
            return Err(lines.err(format!(
                "non-triangle cell at element {k} (gmsh type {kind})"
            )));
        }
        let ntags: usize = lines.parse(toks.get(2), "tag count")?;
        let mut tri = [0usize; 3];
        for (j, slot) in tri.iter_mut().enumerate() {
            let id: usize = lines.parse(toks.get(3 + ntags + j), "element node")?;
            *slot = *ids
                .get(&id)
                .ok_or_else(|| lines.err(format!("unknown node id {id}")))?;
        }
        cells.push(tri);
    }
    if lines.tokens()?[0] != "$EndElements" {
        return Err(lines.err("expected $EndElements"));
    }
    BaseMesh::new(coords, cells)
}
