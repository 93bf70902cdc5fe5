import { SessionApi } from './api.js';
import { Workbench } from './workbench.js';

const base = (window as { LAP_SERVICE_URL?: string }).LAP_SERVICE_URL ?? 'http://127.0.0.1:8764';
const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');
new Workbench(root, new SessionApi(base)).start();
