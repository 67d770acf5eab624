var baseMerge = require('./baseMerge');

function customDefaultsMerge(objValue, srcValue, key, object, source, stack) {
  if (isObject(objValue) && isObject(srcValue)) {
    stack.set(srcValue, objValue);
    baseMerge(objValue, srcValue, undefined, customDefaultsMerge, stack);
    stack['delete'](srcValue);
  }
  return objValue;
}

function defaultsDeep(object) {
  var args = Array.prototype.slice.call(arguments, 1);
  args.forEach(function (source) {
    baseMerge(object, source, undefined, customDefaultsMerge, new Map);
  });
  return object;
}

function isObject(value) {
  var type = typeof value;
  return value != null && (type == 'object' || type == 'function');
}

module.exports = defaultsDeep;
