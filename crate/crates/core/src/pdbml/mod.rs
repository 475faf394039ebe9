//! PDBML corpus ingestion.
//!
//! Sequence rows (`entity_poly_seq`: entity id, residue number, monomer id)
//! are pulled from each document with a streaming XML reader, grouped per
//! polymer entity, and written to a single gzip CSV table.

mod corpus;
mod parser;
mod table;

pub use corpus::{discover, ingest_corpus, CorpusFile, IngestOptions, IngestReport};
pub use parser::{parse_pdbml, IngestRecord, PdbmlParser, PdbmlSchema};
pub use table::{
    read_sequence_table, write_sequence_table, SequenceTableReader, SequenceTableWriter,
    TABLE_HEADER,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::io::Write;

    const ONE_ENTITY: &str = r#"<?xml version="1.0" encoding="UTF-8" ?>
<PDBx:datablock datablockName="1ABC" xmlns:PDBx="http://pdbml.pdb.org/schema/pdbx-v50.xsd">
  <PDBx:entity_poly_seqCategory>
    <PDBx:entity_poly_seq entity_id="1" mon_id="ALA" num="1">
      <PDBx:hetero>n</PDBx:hetero>
    </PDBx:entity_poly_seq>
    <PDBx:entity_poly_seq entity_id="1" mon_id="GLY" num="2">
      <PDBx:hetero>n</PDBx:hetero>
    </PDBx:entity_poly_seq>
    <PDBx:entity_poly_seq entity_id="1" mon_id="SER" num="3">
      <PDBx:hetero>n</PDBx:hetero>
    </PDBx:entity_poly_seq>
  </PDBx:entity_poly_seqCategory>
</PDBx:datablock>
"#;

    fn tokens(r: &IngestRecord) -> Vec<&str> {
        r.tokens.iter().map(|t| t.as_str()).collect()
    }

    fn gzip(bytes: &[u8]) -> Vec<u8> {
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(bytes).unwrap();
        enc.finish().unwrap()
    }

    #[test]
    fn minimal_document() {
        let records = parse_pdbml(ONE_ENTITY.as_bytes(), false, "1ABC").unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].id(), "1ABC_1");
        assert_eq!(tokens(&records[0]), ["ALA", "GLY", "SER"]);
    }

    #[test]
    fn gzipped_document() {
        let records = parse_pdbml(gzip(ONE_ENTITY.as_bytes()).as_slice(), true, "1ABC").unwrap();
        assert_eq!(tokens(&records[0]), ["ALA", "GLY", "SER"]);
    }

    #[test]
    fn truncated_gzip() {
        let data = gzip(ONE_ENTITY.as_bytes());
        let cut = &data[..data.len() / 2];
        assert!(matches!(parse_pdbml(cut, true, "x"), Err(Error::Gzip(_))));
        assert!(matches!(
            parse_pdbml(&b"not gzip at all"[..], true, "x"),
            Err(Error::Gzip(_))
        ));
    }

    #[test]
    fn no_sequence_category() {
        let doc = r#"<PDBx:datablock xmlns:PDBx="x"><PDBx:cellCategory/></PDBx:datablock>"#;
        assert!(parse_pdbml(doc.as_bytes(), false, "x").unwrap().is_empty());
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let doc = "<a><b></a>";
        match parse_pdbml(doc.as_bytes(), false, "x") {
            Err(Error::MalformedXml { offset, .. }) => assert!(offset > 0),
            other => panic!("expected MalformedXml, got {other:?}"),
        }
        assert!(matches!(
            parse_pdbml(&b"<a><b>"[..], false, "x"),
            Err(Error::MalformedXml { .. })
        ));
        assert!(matches!(
            parse_pdbml(&b""[..], false, "x"),
            Err(Error::MalformedXml { .. })
        ));
    }

    #[test]
    fn residues_sorted_and_deduplicated() {
        let doc = r#"<root>
          <entity_poly_seq entity_id="2" mon_id="TRP" num="2"/>
          <entity_poly_seq entity_id="2" mon_id="MET" num="1"/>
          <entity_poly_seq entity_id="2" mon_id="VAL" num="2"/>
          <entity_poly_seq entity_id="10" mon_id="LYS" num="1"/>
        </root>"#;
        let records = parse_pdbml(doc.as_bytes(), false, "f").unwrap();
        // lexicographic entity order
        assert_eq!(records[0].entity_id, "10");
        assert_eq!(tokens(&records[1]), ["MET", "TRP"]);
    }

    #[test]
    fn child_element_fields_and_type_exclusion() {
        let doc = r#"<PDBx:datablock xmlns:PDBx="x">
          <PDBx:entityCategory>
            <PDBx:entity id="1"><PDBx:type>polymer</PDBx:type></PDBx:entity>
            <PDBx:entity id="2"><PDBx:type>polymer</PDBx:type></PDBx:entity>
            <PDBx:entity id="3"><PDBx:type>non-polymer</PDBx:type></PDBx:entity>
          </PDBx:entityCategory>
          <PDBx:entity_polyCategory>
            <PDBx:entity_poly entity_id="1"><PDBx:type>polypeptide(L)</PDBx:type></PDBx:entity_poly>
            <PDBx:entity_poly entity_id="2"><PDBx:type>polydeoxyribonucleotide</PDBx:type></PDBx:entity_poly>
          </PDBx:entity_polyCategory>
          <PDBx:entity_poly_seqCategory>
            <PDBx:entity_poly_seq><PDBx:entity_id>1</PDBx:entity_id><PDBx:num>1</PDBx:num><PDBx:mon_id>MET</PDBx:mon_id></PDBx:entity_poly_seq>
            <PDBx:entity_poly_seq entity_id="2" mon_id="DA" num="1"/>
            <PDBx:entity_poly_seq entity_id="3" mon_id="HOH" num="1"/>
            <PDBx:entity_poly_seq entity_id="4" mon_id="UNK" num="1"/>
          </PDBx:entity_poly_seqCategory>
        </PDBx:datablock>"#;
        let records = parse_pdbml(doc.as_bytes(), false, "f").unwrap();
        let ids: Vec<&str> = records.iter().map(|r| r.entity_id.as_str()).collect();
        // 2 is DNA, 3 is non-polymer, 4 has no type information and is kept
        assert_eq!(ids, ["1", "4"]);
        assert_eq!(tokens(&records[0]), ["MET"]);
    }

    #[test]
    fn custom_schema_names() {
        let doc = r#"<doc><res ent="A" pos="1" code="ALA"/><res ent="A" pos="2" code="CYS"/></doc>"#;
        let parser = PdbmlParser::new(PdbmlSchema {
            seq_row: "res".into(),
            seq_entity_field: "ent".into(),
            seq_ordinal_field: "pos".into(),
            seq_monomer_field: "code".into(),
            ..PdbmlSchema::default()
        });
        let records = parser.parse(doc.as_bytes(), false, "f").unwrap();
        assert_eq!(tokens(&records[0]), ["ALA", "CYS"]);
    }

    #[test]
    fn bad_ordinal_or_code_fails_file() {
        let doc = r#"<r><entity_poly_seq entity_id="1" mon_id="ALA" num="x"/></r>"#;
        assert!(matches!(
            parse_pdbml(doc.as_bytes(), false, "f"),
            Err(Error::MalformedXml { .. })
        ));
        let doc = r#"<r><entity_poly_seq entity_id="1" mon_id="al a" num="1"/></r>"#;
        assert!(matches!(
            parse_pdbml(doc.as_bytes(), false, "f"),
            Err(Error::InvalidCode(_))
        ));
    }
}
