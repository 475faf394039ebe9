use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read};

use flate2::read::MultiGzDecoder;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::{MonomerCode, ProteinSequence};

/// Element and field names used to locate sequence rows in a PDBML document.
///
/// Names are matched on the local part only, so the `PDBx:` namespace prefix
/// (or any other) is ignored. A row's fields may be given either as
/// attributes or as direct child elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdbmlSchema {
    pub seq_row: String,
    pub seq_entity_field: String,
    pub seq_ordinal_field: String,
    pub seq_monomer_field: String,
    pub poly_row: String,
    pub poly_entity_field: String,
    pub poly_type_field: String,
    pub entity_row: String,
    pub entity_id_field: String,
    pub entity_type_field: String,
}

impl Default for PdbmlSchema {
    fn default() -> Self {
        Self {
            seq_row: "entity_poly_seq".into(),
            seq_entity_field: "entity_id".into(),
            seq_ordinal_field: "num".into(),
            seq_monomer_field: "mon_id".into(),
            poly_row: "entity_poly".into(),
            poly_entity_field: "entity_id".into(),
            poly_type_field: "type".into(),
            entity_row: "entity".into(),
            entity_id_field: "id".into(),
            entity_type_field: "type".into(),
        }
    }
}

/// One polymer entity's monomer sequence from one source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestRecord {
    pub source_file: String,
    pub entity_id: String,
    pub tokens: Vec<MonomerCode>,
}

impl IngestRecord {
    pub fn id(&self) -> String {
        format!("{}_{}", self.source_file, self.entity_id)
    }

    pub fn to_sequence(&self) -> ProteinSequence {
        ProteinSequence::new(self.id(), self.tokens.clone())
            .expect("ingest records are never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Seq,
    Poly,
    Entity,
}

struct OpenRow {
    kind: RowKind,
    depth: usize,
    fields: HashMap<String, String>,
    // child element currently collecting text
    field: Option<String>,
}

#[derive(Default)]
struct Collected {
    // entity id -> (ordinal, code) in document order
    residues: HashMap<String, Vec<(i64, String)>>,
    entity_order: Vec<String>,
    excluded: Vec<String>,
}

/// Stateless PDBML sequence extractor.
#[derive(Debug, Clone, Default)]
pub struct PdbmlParser {
    schema: PdbmlSchema,
}

impl PdbmlParser {
    pub fn new(schema: PdbmlSchema) -> Self {
        Self { schema }
    }

    pub fn schema(&self) -> &PdbmlSchema {
        &self.schema
    }

    /// Extracts one record per polymer entity that has sequence rows.
    ///
    /// Residues are ordered by ascending ordinal; repeated ordinals within an
    /// entity (micro-heterogeneity) keep the first monomer listed.
    pub fn parse<R: Read>(
        &self,
        content: R,
        gzipped: bool,
        source_file: &str,
    ) -> Result<Vec<IngestRecord>> {
        if gzipped {
            let decoder = GzipTagged(MultiGzDecoder::new(content));
            self.parse_xml(BufReader::new(decoder), source_file)
        } else {
            self.parse_xml(BufReader::new(content), source_file)
        }
    }

    fn row_kind(&self, local: &str) -> Option<RowKind> {
        if local == self.schema.seq_row {
            Some(RowKind::Seq)
        } else if local == self.schema.poly_row {
            Some(RowKind::Poly)
        } else if local == self.schema.entity_row {
            Some(RowKind::Entity)
        } else {
            None
        }
    }

    fn parse_xml<R: BufRead>(&self, input: R, source_file: &str) -> Result<Vec<IngestRecord>> {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        let mut buf = Vec::new();
        let mut depth = 0usize;
        let mut saw_root = false;
        let mut row: Option<OpenRow> = None;
        let mut out = Collected::default();

        loop {
            let event = reader
                .read_event_into(&mut buf)
                .map_err(|e| xml_error(e, reader.error_position()))?;
            match event {
                Event::Start(e) => {
                    saw_root = true;
                    depth += 1;
                    self.on_open(&e, depth, false, &mut row, &mut out, &reader)?;
                }
                Event::Empty(e) => {
                    saw_root = true;
                    self.on_open(&e, depth + 1, true, &mut row, &mut out, &reader)?;
                }
                Event::End(_) => {
                    if let Some(open) = row.as_mut() {
                        if depth == open.depth {
                            let done = row.take().expect("row is open");
                            self.finish_row(done, &mut out, &reader)?;
                        } else if depth == open.depth + 1 {
                            open.field = None;
                        }
                    }
                    depth = depth.saturating_sub(1);
                }
                Event::Text(t) => {
                    if let Some(OpenRow {
                        field: Some(name),
                        fields,
                        ..
                    }) = row.as_mut()
                    {
                        let text = t
                            .unescape()
                            .map_err(|e| xml_error(e, reader.buffer_position()))?;
                        fields.entry(name.clone()).or_default().push_str(&text);
                    }
                }
                Event::Eof => break,
                _ => {}
            }
            buf.clear();
        }

        if !saw_root || depth != 0 {
            return Err(Error::MalformedXml {
                offset: reader.buffer_position(),
                message: "unexpected end of document".into(),
            });
        }
        assemble(out, source_file)
    }

    fn on_open<R>(
        &self,
        e: &BytesStart<'_>,
        depth: usize,
        empty: bool,
        row: &mut Option<OpenRow>,
        out: &mut Collected,
        reader: &Reader<R>,
    ) -> Result<()> {
        let local = e.local_name();
        let local = std::str::from_utf8(local.as_ref()).unwrap_or_default();
        match row.as_mut() {
            Some(open) => {
                if depth == open.depth + 1 && !empty {
                    open.field = Some(local.to_string());
                }
            }
            None => {
                if let Some(kind) = self.row_kind(local) {
                    let mut fields = HashMap::new();
                    for attr in e.attributes() {
                        let attr = attr.map_err(|err| Error::MalformedXml {
                            offset: reader.buffer_position(),
                            message: err.to_string(),
                        })?;
                        let key = std::str::from_utf8(attr.key.local_name().as_ref())
                            .unwrap_or_default()
                            .to_string();
                        let value = attr
                            .unescape_value()
                            .map_err(|err| xml_error(err, reader.buffer_position()))?;
                        fields.insert(key, value.into_owned());
                    }
                    let open = OpenRow {
                        kind,
                        depth,
                        fields,
                        field: None,
                    };
                    if empty {
                        self.finish_row(open, out, reader)?;
                    } else {
                        *row = Some(open);
                    }
                }
            }
        }
        Ok(())
    }

    fn finish_row<R>(&self, row: OpenRow, out: &mut Collected, reader: &Reader<R>) -> Result<()> {
        let s = &self.schema;
        let get = |name: &str| row.fields.get(name).map(|v| v.trim().to_string());
        match row.kind {
            RowKind::Seq => {
                let missing = |field: &str| Error::MalformedXml {
                    offset: reader.buffer_position(),
                    message: format!("{} row without {field}", s.seq_row),
                };
                let entity = get(&s.seq_entity_field).ok_or_else(|| missing(&s.seq_entity_field))?;
                let ordinal = get(&s.seq_ordinal_field).ok_or_else(|| missing(&s.seq_ordinal_field))?;
                let monomer = get(&s.seq_monomer_field).ok_or_else(|| missing(&s.seq_monomer_field))?;
                let ordinal: i64 = ordinal.parse().map_err(|_| Error::MalformedXml {
                    offset: reader.buffer_position(),
                    message: format!("non-integer residue number {ordinal:?}"),
                })?;
                if !out.residues.contains_key(&entity) {
                    out.entity_order.push(entity.clone());
                }
                out.residues.entry(entity).or_default().push((ordinal, monomer));
            }
            RowKind::Poly => {
                if let (Some(entity), Some(kind)) =
                    (get(&s.poly_entity_field), get(&s.poly_type_field))
                {
                    if !is_peptide_polymer_type(&kind) {
                        out.excluded.push(entity);
                    }
                }
            }
            RowKind::Entity => {
                if let (Some(entity), Some(kind)) =
                    (get(&s.entity_id_field), get(&s.entity_type_field))
                {
                    if !kind.eq_ignore_ascii_case("polymer") {
                        out.excluded.push(entity);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Nucleic-acid polymer types are excluded; everything else (including
/// unusual peptide-like types) is kept.
fn is_peptide_polymer_type(kind: &str) -> bool {
    let kind = kind.to_ascii_lowercase();
    !(kind.contains("nucleotide") || kind.contains("nucleic"))
}

fn assemble(collected: Collected, source_file: &str) -> Result<Vec<IngestRecord>> {
    let Collected {
        mut residues,
        entity_order,
        excluded,
    } = collected;
    let mut records: Vec<IngestRecord> = entity_order
        .into_iter()
        .filter(|e| !excluded.contains(e))
        .filter_map(|entity| {
            let mut rows = residues.remove(&entity)?;
            rows.sort_by_key(|(ordinal, _)| *ordinal);
            rows.dedup_by_key(|(ordinal, _)| *ordinal);
            let tokens = rows
                .into_iter()
                .map(|(_, code)| MonomerCode::new(code))
                .collect::<Result<Vec<_>>>();
            Some(tokens.map(|tokens| IngestRecord {
                source_file: source_file.to_string(),
                entity_id: entity,
                tokens,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    records.retain(|r| !r.tokens.is_empty());
    records.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
    Ok(records)
}

/// Convenience wrapper using the default schema.
pub fn parse_pdbml<R: Read>(
    content: R,
    gzipped: bool,
    source_file: &str,
) -> Result<Vec<IngestRecord>> {
    PdbmlParser::default().parse(content, gzipped, source_file)
}

// Marks I/O errors raised by the gzip decoder so they can be told apart
// from XML syntax errors after passing through quick-xml.
struct GzipTagged<R>(R);

#[derive(Debug)]
struct GzipFault(io::Error);

impl fmt::Display for GzipFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for GzipFault {}

impl<R: Read> Read for GzipTagged<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.0
            .read(buf)
            .map_err(|e| io::Error::new(e.kind(), GzipFault(e)))
    }
}

fn xml_error(err: impl Into<quick_xml::Error>, offset: u64) -> Error {
    match err.into() {
        quick_xml::Error::Io(io) => {
            if io.get_ref().is_some_and(|inner| inner.is::<GzipFault>()) {
                Error::Gzip(io.to_string())
            } else {
                Error::Io(io::Error::new(io.kind(), io.to_string()))
            }
        }
        other => Error::MalformedXml {
            offset,
            message: other.to_string(),
        },
    }
}
