//! The reference project header and sample entries used by fixtures, docs
//! and tests.
//!
//! The dictionary covers the backend vocabulary of the sample project:
//! layers Handler/Service/Repository/Model/Middleware/Router/Config, a few
//! business modules, and table dimensions for its schema. `N` in dimension D
//! has no published meaning and is kept as an opaque project code.

use crate::grammar::parse_index;
use crate::model::TagDictionary;

pub const REFERENCE_HEADER: &str = "\
#AOCI 1
#PROJECT AOCI Platform
#OVERVIEW Multi-tenant backend serving code indexes, organizations and credits.
#STACK Go+Gin+Vue 3, PostgreSQL, Redis
#DIM A H=Handler,S=Service,P=Repository,M=Model,W=Middleware,R=Router,C=Config
#DIM B C=Core,A=Auth,O=Org,R=Role,K=Credits
#DIM C 9,8,7,5,3,1
#DIM D J=JWT,R=RBAC,T=Transaction,X=Encryption,N=N
#DIM E T=Tiny,S=Small,M=Medium,L=Large
#TDIM DOMAIN U=User,P=Points,I=Indexing,D=Audit
#TDIM TYPE M=Main,A=Association,L=Log,C=Config
#TDIM SCALE S=Small,M=Medium,L=Large
#TDIM FEAT JSONB=JSONB fields,UQ=Unique constraints,SD=Soft delete,FK=Foreign keys,GUID=GUID identification
";

pub const SAMPLE_AUTH: &str = "auth.go[WA9JM]: F:JWT authentication middleware | R:pkg/jwt,model/user | A:- | S:extract Bearer token from Authorization header, parse and verify JWT, inject user_id and is_superadmin into gin.Context, expiration check, refresh logic, API key fallback authentication, match key_prefix and query SHA256";

pub const SAMPLE_ORG_REPO: &str = "org_repo.go[PO9NTM]: F:organizational data access | R:model/org | A:- | S:CreateWithClosure, four-step atomic transaction, closure-table JOIN query for GetTree, closure-table query for GetAncestors, MoveNode subtree closure-relation reconstruction, Delete cascading cleanup";

pub const SAMPLE_CONFIG: &str = "config.yaml[CC9T]: F:main configuration | R:internal/config/config.go | A:- | S:DB/Redis/JWT/encryption keys/rate limiting/LLM proxy/CORS";

pub const USERS_TABLE: &str = "users[U-M-M-GUID]: user primary table, uuid/username/email unique, password_hash bcrypt, status, is_superadmin, preferences JSONB, soft delete";

/// The reference header followed by the three sample entries and the users
/// table, in canonical form.
pub fn sample_document() -> String {
    format!("{REFERENCE_HEADER}@CODE\n{SAMPLE_AUTH}\n{SAMPLE_ORG_REPO}\n{SAMPLE_CONFIG}\n@TABLES\n{USERS_TABLE}\n")
}

pub fn reference_dictionary() -> TagDictionary {
    let doc = format!("{REFERENCE_HEADER}@CODE\n");
    let index = parse_index(&doc).expect("reference header parses");
    index.dictionary().clone()
}
